#include "wop/geodesy.hpp"

#include <cmath>
#include <stdexcept>

#include "wop/wop_metric.hpp"

namespace wop {

double lambda_reparam(double t, double m0, double m1) {
  if (t < 0.0 || t > 1.0) {
    throw std::invalid_argument("lambda_reparam: t must be in [0,1]");
  }
  if (!(m0 >= 0.0) || !(m1 >= 0.0)) {
    throw std::invalid_argument("lambda_reparam: masses must be >= 0");
  }
  const double denom = (1.0 - t) * m0 + t * m1;
  if (denom == 0.0) {
    throw std::invalid_argument("lambda_reparam: vanishing interpolated mass");
  }
  return t * m1 / denom;
}

GeodesicInterpolator::GeodesicInterpolator(const DiscreteMeasure& mu0,
                                           const DiscreteMeasure& mu1,
                                           const Vector& x0)
    : mu0_(mu0), mu1_(mu1), m0_(mu0.total_mass()), m1_(mu1.total_mass()) {
  both_null_ = (m0_ == 0.0 && m1_ == 0.0);
  if (both_null_) return;
  const DiscreteMeasure bar0 = normalize(mu0, x0);
  const DiscreteMeasure bar1 = normalize(mu1, x0);
  const TransportResult tr = solve_w2_exact(bar0, bar1);
  const Matrix& pi = tr.coupling.matrix;
  Eigen::Index support = 0;
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    for (Eigen::Index j = 0; j < pi.cols(); ++j) {
      if (pi(i, j) > 0.0) ++support;
    }
  }
  from_.resize(support, bar0.dim());
  to_.resize(support, bar1.dim());
  plan_weights_.resize(support);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    for (Eigen::Index j = 0; j < pi.cols(); ++j) {
      if (pi(i, j) > 0.0) {
        from_.row(k) = bar0.point(i);
        to_.row(k) = bar1.point(j);
        plan_weights_(k) = pi(i, j);
        ++k;
      }
    }
  }
}

double GeodesicInterpolator::lambda_at(double t) const {
  // With a null endpoint the reparametrization collapses: from the null
  // side the path is the pure mass ramp on the other endpoint's shape.
  if (m0_ == 0.0) return 1.0;
  if (m1_ == 0.0) return 0.0;
  return lambda_reparam(t, m0_, m1_);
}

DiscreteMeasure GeodesicInterpolator::at_support(double t) const {
  if (both_null_) return mu0_;
  const double mt = (1.0 - t) * m0_ + t * m1_;
  const double lam = lambda_at(t);
  Matrix pts = (1.0 - lam) * from_ + lam * to_;
  Vector w = mt * plan_weights_;
  return DiscreteMeasure(std::move(pts), std::move(w));
}

GeodesicSample GeodesicInterpolator::at(double t) const {
  if (t < 0.0 || t > 1.0) {
    throw std::invalid_argument("geodesic: t must be in [0,1]");
  }
  GeodesicSample s;
  s.t = t;
  s.mass = (1.0 - t) * m0_ + t * m1_;
  s.both_endpoints_null = both_null_;
  if (both_null_) {
    s.measure = mu0_;
    s.lambda = t;
    return s;
  }
  s.lambda = lambda_at(t);
  if (t == 0.0) {
    s.measure = mu0_;
  } else if (t == 1.0) {
    s.measure = mu1_;
  } else {
    s.measure = at_support(t);
  }
  return s;
}

GeodesicSample geodesic(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                        double t, const Vector& x0) {
  return GeodesicInterpolator(mu0, mu1, x0).at(t);
}

SourcedPath sample_geodesic_path(const DiscreteMeasure& mu0,
                                 const DiscreteMeasure& mu1, int steps,
                                 const Vector& x0) {
  if (steps < 1) {
    throw std::invalid_argument("sample_geodesic_path: steps must be >= 1");
  }
  const GeodesicInterpolator interp(mu0, mu1, x0);
  SourcedPath path;
  path.times.resize(steps + 1);
  path.measures.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    path.times(k) = static_cast<double>(k) / steps;
    path.measures.push_back(interp.at_support(path.times(k)));
  }
  path.velocities.reserve(steps);
  path.mass_rates = Vector::Constant(steps, interp.mass1() - interp.mass0());
  for (int k = 0; k < steps; ++k) {
    const double dt = path.times(k + 1) - path.times(k);
    path.velocities.push_back(
        (path.measures[k + 1].points() - path.measures[k].points()) / dt);
  }
  return path;
}

double dynamic_action(const SourcedPath& path, const Vector& x0) {
  const Eigen::Index num_times = path.times.size();
  if (num_times < 2 || path.measures.size() != static_cast<size_t>(num_times) ||
      path.velocities.size() != static_cast<size_t>(num_times - 1) ||
      path.mass_rates.size() != num_times - 1) {
    throw std::invalid_argument("dynamic_action: inconsistent path sizes");
  }
  if (path.times(0) != 0.0 || path.times(num_times - 1) != 1.0) {
    throw std::invalid_argument("dynamic_action: times must run from 0 to 1");
  }
  const Eigen::Index atoms = path.measures[0].size();
  for (const DiscreteMeasure& m : path.measures) {
    if (m.size() != atoms) {
      throw std::invalid_argument("dynamic_action: atom count changes");
    }
  }

  constexpr double kConsistencyTol = 1e-6;
  const Eigen::Index steps = num_times - 1;
  for (Eigen::Index k = 0; k < steps; ++k) {
    const double dt = path.times(k + 1) - path.times(k);
    if (!(dt > 0.0)) {
      throw std::invalid_argument("dynamic_action: times not increasing");
    }
    const Matrix residual = path.measures[k + 1].points() -
                            path.measures[k].points() -
                            dt * path.velocities[k];
    const double mass_residual = path.measures[k + 1].total_mass() -
                                 path.measures[k].total_mass() -
                                 dt * path.mass_rates(k);
    const double atom_res =
        atoms > 0 ? residual.cwiseAbs().maxCoeff() : 0.0;
    if (atom_res > kConsistencyTol ||
        std::abs(mass_residual) > kConsistencyTol) {
      throw std::invalid_argument(
          "dynamic_action: path violates the continuity-with-source "
          "contract");
    }
  }

  // Normalized weights at a node; null interior measures borrow the
  // profile of the nearest non-null node (the geodesic case, where the
  // normalized weights are constant along the path).
  auto normalized_weights = [&](Eigen::Index k) -> Vector {
    for (Eigen::Index off = 0; off < num_times; ++off) {
      for (const Eigen::Index node : {k - off, k + off}) {
        if (node < 0 || node >= num_times) continue;
        const double m = path.measures[node].total_mass();
        if (m > 0.0) return path.measures[node].weights() / m;
      }
    }
    return Vector::Zero(atoms);
  };

  Vector g(num_times);
  for (Eigen::Index k = 0; k < num_times; ++k) {
    // node rates: average of the adjacent step rates in the interior,
    // second-order one-sided extrapolation at the ends
    Matrix u;
    double mp;
    if (k == 0) {
      if (steps >= 2) {
        u = 1.5 * path.velocities[0] - 0.5 * path.velocities[1];
        mp = 1.5 * path.mass_rates(0) - 0.5 * path.mass_rates(1);
      } else {
        u = path.velocities[0];
        mp = path.mass_rates(0);
      }
    } else if (k == steps) {
      if (steps >= 2) {
        u = 1.5 * path.velocities[steps - 1] - 0.5 * path.velocities[steps - 2];
        mp = 1.5 * path.mass_rates(steps - 1) -
             0.5 * path.mass_rates(steps - 2);
      } else {
        u = path.velocities[steps - 1];
        mp = path.mass_rates(steps - 1);
      }
    } else {
      const double dt_prev = path.times(k) - path.times(k - 1);
      const double dt_next = path.times(k + 1) - path.times(k);
      const double wsum = dt_prev + dt_next;
      u = (dt_next * path.velocities[k - 1] + dt_prev * path.velocities[k]) /
          wsum;
      mp = (dt_next * path.mass_rates(k - 1) + dt_prev * path.mass_rates(k)) /
           wsum;
    }
    const double mass = path.measures[k].total_mass();
    const Vector wbar = normalized_weights(k);
    const Matrix drift = mass * u + mp * (path.measures[k].points().rowwise() -
                                          x0.transpose());
    g(k) = mp * mp + wbar.dot(drift.rowwise().squaredNorm());
  }

  double action = 0.0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    action += 0.5 * (path.times(k + 1) - path.times(k)) * (g(k) + g(k + 1));
  }
  return action;
}

double curvature_gap(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                     const DiscreteMeasure& eta, double t, const Vector& x0) {
  if (t < 0.0 || t > 1.0) {
    throw std::invalid_argument("curvature_gap: t must be in [0,1]");
  }
  const GeodesicSample mid = geodesic(mu0, mu1, t, x0);
  const double d_mid = wop_distance(mid.measure, eta, x0).distance;
  const double d0 = wop_distance(mu0, eta, x0).distance;
  const double d1 = wop_distance(mu1, eta, x0).distance;
  const double d01 = wop_distance(mu0, mu1, x0).distance;
  return d_mid * d_mid - ((1.0 - t) * d0 * d0 + t * d1 * d1 -
                          t * (1.0 - t) * d01 * d01);
}

}  // namespace wop
