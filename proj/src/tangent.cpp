#include "wop/tangent.hpp"

#include <cmath>
#include <stdexcept>

namespace wop {

namespace {

void require_positive_mass(const DiscreteMeasure& mu, const char* who) {
  if (mu.is_null()) {
    throw std::invalid_argument(std::string(who) +
                                ": null base measure not allowed");
  }
}

Vector normalized_weights(const DiscreteMeasure& mu) {
  return mu.weights() / mu.total_mass();
}

}  // namespace

double inner_product(const TangentVector& v1, const TangentVector& v2,
                     const DiscreteMeasure& mu, const Vector& x0) {
  require_positive_mass(mu, "inner_product");
  if (v1.u.rows() != mu.size() || v2.u.rows() != mu.size()) {
    throw std::invalid_argument("inner_product: atom count mismatch");
  }
  const double m = mu.total_mass();
  const Matrix centered = mu.points().rowwise() - x0.transpose();
  const Matrix d1 = m * v1.u + v1.m_prime * centered;
  const Matrix d2 = m * v2.u + v2.m_prime * centered;
  const Vector wbar = normalized_weights(mu);
  return v1.m_prime * v2.m_prime +
         wbar.dot((d1.array() * d2.array()).rowwise().sum().matrix());
}

TangentVector wop_gradient(const FirstVariationOracle& F,
                           const DiscreteMeasure& mu, const Vector& x0) {
  require_positive_mass(mu, "wop_gradient");
  if (!F.linear_growth_certified) {
    throw std::invalid_argument(
        "wop_gradient: first variation lacks the linear-growth certificate");
  }
  const double m = mu.total_mass();
  const Vector wbar = normalized_weights(mu);
  const Eigen::Index n = mu.size();
  const Eigen::Index d = mu.dim();

  Vector values(n);
  Matrix grads(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = F.variation(mu, mu.point(i));
    grads.row(i) = F.variation_grad(mu, mu.point(i));
  }
  const Matrix centered = mu.points().rowwise() - x0.transpose();
  const double m_prime =
      wbar.dot(values) -
      wbar.dot((grads.array() * centered.array()).rowwise().sum().matrix());
  TangentVector g;
  g.m_prime = m_prime;
  g.u = (grads - m_prime * centered) / m;
  return g;
}

std::pair<double, double> directional_derivative_check(
    const FirstVariationOracle& F, const DiscreteMeasure& mu,
    const TangentVector& v, const Vector& x0, double dt) {
  require_positive_mass(mu, "directional_derivative_check");
  if (!(dt > 0.0)) {
    throw std::invalid_argument(
        "directional_derivative_check: dt must be > 0");
  }
  const double m = mu.total_mass();
  const double m_new = m + dt * v.m_prime;
  const DiscreteMeasure perturbed(mu.points() + dt * v.u,
                                  mu.weights() * (m_new / m));
  const double lhs = (F.value(perturbed) - F.value(mu)) / dt;
  const double rhs = inner_product(wop_gradient(F, mu, x0), v, mu, x0);
  return {lhs, rhs};
}

FirstVariationOracle extend_functional(const ProbabilityFunctional& F,
                                       const Vector& x0) {
  FirstVariationOracle out;
  auto lift = [x0](const DiscreteMeasure& mu) {
    return pushforward_dilation(normalize(mu, x0), mu.total_mass(), x0);
  };
  out.value = [F, lift](const DiscreteMeasure& mu) {
    return F.value(lift(mu));
  };
  // dF~/dmu(x) = psi(T_m x)/m - (int psi drho)/m
  //              + int <grad psi(T_m y), y - x0> dmu_bar(y),
  // with rho = T_m#mu_bar and psi the first variation of F at rho. The
  // last two terms do not depend on x.
  auto dilate = [x0](const Eigen::RowVectorXd& x, double a) {
    return Eigen::RowVectorXd((x - x0.transpose()) * a + x0.transpose());
  };
  out.variation = [F, lift, dilate, x0](const DiscreteMeasure& mu,
                                        const Eigen::RowVectorXd& x) {
    require_positive_mass(mu, "extend_functional variation");
    const double m = mu.total_mass();
    const DiscreteMeasure rho = lift(mu);
    const Vector wbar = rho.weights();  // rho is a probability measure
    double mean_psi = 0.0;
    double radial = 0.0;
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
      mean_psi += wbar(i) * F.variation(rho, rho.point(i));
      // y - x0 = (T_m(y) - x0)/m for the lifted atom
      radial += wbar(i) * F.variation_grad(rho, rho.point(i))
                              .dot((rho.point(i) - x0.transpose()) / m);
    }
    return (F.variation(rho, dilate(x, m)) - mean_psi) / m + radial;
  };
  out.variation_grad = [F, lift, dilate](const DiscreteMeasure& mu,
                                         const Eigen::RowVectorXd& x) {
    require_positive_mass(mu, "extend_functional variation_grad");
    const DiscreteMeasure rho = lift(mu);
    return F.variation_grad(rho, dilate(x, mu.total_mass()));
  };
  out.linear_growth_certified = F.linear_growth_certified;
  return out;
}

bool is_conservative(const FirstVariationOracle& F,
                     const std::vector<DiscreteMeasure>& samples,
                     const Vector& x0, double tol) {
  for (const DiscreteMeasure& mu : samples) {
    require_positive_mass(mu, "is_conservative");
    if (std::abs(wop_gradient(F, mu, x0).m_prime) > tol) return false;
  }
  return true;
}

FlowPath flow_particles(const FirstVariationOracle& F,
                        const DiscreteMeasure& mu0, const Vector& x0,
                        double dt, int steps) {
  require_positive_mass(mu0, "flow_particles");
  if (!(dt > 0.0) || steps < 0) {
    throw std::invalid_argument("flow_particles: need dt > 0, steps >= 0");
  }
  std::vector<double> times = {0.0};
  std::vector<DiscreteMeasure> measures = {mu0};
  std::vector<double> masses = {mu0.total_mass()};
  std::vector<double> f_values = {F.value(mu0)};
  bool halted = false;
  DiscreteMeasure current = mu0;
  for (int k = 0; k < steps; ++k) {
    const TangentVector grad = wop_gradient(F, current, x0);
    const double m = current.total_mass();
    const double m_new = m - dt * grad.m_prime;
    if (!(m_new > 0.0)) {
      halted = true;
      break;
    }
    current = DiscreteMeasure(current.points() - dt * grad.u,
                              current.weights() * (m_new / m));
    times.push_back(dt * (k + 1));
    measures.push_back(current);
    masses.push_back(m_new);
    f_values.push_back(F.value(current));
  }
  FlowPath path;
  path.times = Eigen::Map<const Vector>(times.data(), times.size());
  path.measures = std::move(measures);
  path.masses = Eigen::Map<const Vector>(masses.data(), masses.size());
  path.f_values = Eigen::Map<const Vector>(f_values.data(), f_values.size());
  path.halted_early = halted;
  return path;
}

GridFlowResult heat_flow_grid(const Vector& rho0, double dt, int steps,
                              double dx, int frame_stride) {
  if (rho0.size() < 2) {
    throw std::invalid_argument("heat_flow_grid: need at least 2 cells");
  }
  if (!(dt > 0.0) || !(dx > 0.0) || steps < 0) {
    throw std::invalid_argument("heat_flow_grid: bad dt/dx/steps");
  }
  if (rho0.minCoeff() < -1e-12) {
    throw std::invalid_argument("heat_flow_grid: negative density");
  }
  Vector rho = rho0.cwiseMax(0.0);
  const double m0 = rho.sum() * dx;
  if (!(m0 > 0.0)) {
    throw std::invalid_argument("heat_flow_grid: zero initial mass");
  }
  if (dt > dx * dx * m0 * m0 / 2.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument(
        "heat_flow_grid: stability bound dt <= dx^2 m^2 / 2 violated");
  }

  GridFlowResult out;
  out.dx = dx;
  std::vector<Vector> frames = {rho};
  std::vector<double> frame_times = {0.0};
  Vector masses(steps + 1);
  const Eigen::Index n = rho.size();
  Vector lap(n);
  for (int k = 0; k < steps; ++k) {
    const double m = rho.sum() * dx;  // provably constant; refreshed anyway
    masses(k) = m;
    const double factor = dt / (m * m * dx * dx);
    lap(0) = rho(1) - rho(0);
    for (Eigen::Index i = 1; i < n - 1; ++i) {
      lap(i) = rho(i - 1) - 2.0 * rho(i) + rho(i + 1);
    }
    lap(n - 1) = rho(n - 2) - rho(n - 1);
    rho += factor * lap;
    if (frame_stride > 0 && (k + 1) % frame_stride == 0 && k + 1 < steps) {
      frames.push_back(rho);
      frame_times.push_back(dt * (k + 1));
    }
  }
  masses(steps) = rho.sum() * dx;
  if (steps > 0) {
    frames.push_back(rho);
    frame_times.push_back(dt * steps);
  }
  out.frames = std::move(frames);
  out.frame_times =
      Eigen::Map<const Vector>(frame_times.data(), frame_times.size());
  out.masses = masses;
  return out;
}

double boltzmann_entropy_grid(const Vector& rho, double dx) {
  const double m = rho.sum() * dx;
  if (!(m > 0.0)) {
    throw std::invalid_argument("boltzmann_entropy_grid: zero mass");
  }
  double e = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    const double density = rho(i) / m;
    if (density > 0.0) e += density * std::log(density) * dx;
  }
  return e - std::log(m);
}

FirstVariationOracle total_mass_functional() {
  FirstVariationOracle F;
  F.value = [](const DiscreteMeasure& mu) { return mu.total_mass(); };
  F.variation = [](const DiscreteMeasure&, const Eigen::RowVectorXd&) {
    return 1.0;
  };
  F.variation_grad = [](const DiscreteMeasure&, const Eigen::RowVectorXd& x) {
    return Eigen::RowVectorXd::Zero(x.size()).eval();
  };
  F.linear_growth_certified = true;
  return F;
}

FirstVariationOracle half_squared_distance_to_null(const Vector& x0) {
  FirstVariationOracle F;
  F.value = [x0](const DiscreteMeasure& mu) {
    const double m = mu.total_mass();
    return 0.5 * (m * m + m * moment2(mu, x0));
  };
  F.variation = [x0](const DiscreteMeasure& mu, const Eigen::RowVectorXd& x) {
    const double m = mu.total_mass();
    return m + 0.5 * moment2(mu, x0) +
           0.5 * m * (x - x0.transpose()).squaredNorm();
  };
  F.variation_grad = [x0](const DiscreteMeasure& mu,
                          const Eigen::RowVectorXd& x) {
    return Eigen::RowVectorXd(mu.total_mass() * (x - x0.transpose()));
  };
  F.linear_growth_certified = true;
  return F;
}

FirstVariationOracle half_lifted_moment(const Vector& x0) {
  FirstVariationOracle F;
  F.value = [x0](const DiscreteMeasure& mu) {
    return 0.5 * mu.total_mass() * moment2(mu, x0);
  };
  F.variation = [x0](const DiscreteMeasure& mu, const Eigen::RowVectorXd& x) {
    return 0.5 * moment2(mu, x0) +
           0.5 * mu.total_mass() * (x - x0.transpose()).squaredNorm();
  };
  F.variation_grad = [x0](const DiscreteMeasure& mu,
                          const Eigen::RowVectorXd& x) {
    return Eigen::RowVectorXd(mu.total_mass() * (x - x0.transpose()));
  };
  F.linear_growth_certified = true;
  return F;
}

FirstVariationOracle half_normalized_moment(const Vector& x0) {
  FirstVariationOracle F;
  F.value = [x0](const DiscreteMeasure& mu) {
    return 0.5 * moment2(mu, x0) / mu.total_mass();
  };
  F.variation = [x0](const DiscreteMeasure& mu, const Eigen::RowVectorXd& x) {
    const double m = mu.total_mass();
    return 0.5 * (x - x0.transpose()).squaredNorm() / m -
           0.5 * moment2(mu, x0) / (m * m);
  };
  F.variation_grad = [x0](const DiscreteMeasure& mu,
                          const Eigen::RowVectorXd& x) {
    return Eigen::RowVectorXd((x - x0.transpose()) / mu.total_mass());
  };
  F.linear_growth_certified = true;
  return F;
}

}  // namespace wop
