#include "wop/uot_compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace wop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

double golden_min(const std::function<double(double)>& fn, double lo,
                  double hi, int iters = 200) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int k = 0; k < iters; ++k) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = fn(d);
    }
  }
  const double mid = 0.5 * (a + b);
  return std::min({fn(mid), fn(a), fn(b), fc, fd});
}

// min over t >= 0 of f(t) + t f'_inf, the exact ET value per unit mass
// against the null measure.
double null_unit_value(const EntropyFunction& e) {
  if (std::isinf(e.f_inf_slope)) return e.f_at_zero;
  auto g = [&](double t) {
    return (t == 0.0 ? e.f_at_zero : e.f(t)) + t * e.f_inf_slope;
  };
  double hi = 1.0;
  while (g(2.0 * hi) < g(hi) && hi < 1e12) hi *= 2.0;
  return std::min(g(0.0), golden_min(g, 0.0, 2.0 * hi));
}

struct StrippedEt {
  Matrix cost;          // finite-or-inf entries over the live atoms
  Vector a, b;          // live weights
  double removed = 0.0;  // f(0) charge of atoms with no finite cost
  bool empty = false;
};

// Removes zero-weight atoms and atoms whose every cost entry is +inf
// (their optimal plan rows/columns vanish, contributing f(0) per unit
// mass).
StrippedEt strip_et(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                    const EtProblem& problem) {
  const DiscreteMeasure a = drop_zero_atoms(mu);
  const DiscreteMeasure b = drop_zero_atoms(nu);
  Matrix cost(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      cost(i, j) = problem.cost(a.point(i), b.point(j));
    }
  }
  std::vector<char> row_live(a.size(), 1), col_live(b.size(), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (!row_live[i]) continue;
      bool any = false;
      for (Eigen::Index j = 0; j < b.size(); ++j) {
        if (col_live[j] && std::isfinite(cost(i, j))) any = true;
      }
      if (!any) {
        row_live[i] = 0;
        changed = true;
      }
    }
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      if (!col_live[j]) continue;
      bool any = false;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (row_live[i] && std::isfinite(cost(i, j))) any = true;
      }
      if (!any) {
        col_live[j] = 0;
        changed = true;
      }
    }
  }
  StrippedEt out;
  double dead_mass = 0.0;
  std::vector<Eigen::Index> ri, cj;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (row_live[i]) ri.push_back(i);
    else dead_mass += a.weight(i);
  }
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    if (col_live[j]) cj.push_back(j);
    else dead_mass += b.weight(j);
  }
  out.removed =
      dead_mass > 0.0 ? problem.entropy.f_at_zero * dead_mass : 0.0;
  out.empty = ri.empty() || cj.empty();
  if (out.empty) {
    // whatever is left on the other side is dead as well
    double rest = 0.0;
    for (Eigen::Index i : ri) rest += a.weight(i);
    for (Eigen::Index j : cj) rest += b.weight(j);
    if (rest > 0.0) out.removed += problem.entropy.f_at_zero * rest;
    return out;
  }
  out.a.resize(static_cast<Eigen::Index>(ri.size()));
  out.b.resize(static_cast<Eigen::Index>(cj.size()));
  out.cost.resize(static_cast<Eigen::Index>(ri.size()),
                  static_cast<Eigen::Index>(cj.size()));
  for (size_t i = 0; i < ri.size(); ++i) {
    out.a(static_cast<Eigen::Index>(i)) = a.weight(ri[i]);
    for (size_t j = 0; j < cj.size(); ++j) {
      out.cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cost(ri[i], cj[j]);
    }
  }
  for (size_t j = 0; j < cj.size(); ++j) {
    out.b(static_cast<Eigen::Index>(j)) = b.weight(cj[j]);
  }
  return out;
}

double entropy_at(const EntropyFunction& e, double t) {
  return t == 0.0 ? e.f_at_zero : e.f(t);
}

// Primal objective on the live atoms (no singular part by construction).
double et_objective(const Matrix& gamma, const Vector& a, const Vector& b,
                    const Matrix& cost, const EntropyFunction& e) {
  double value = 0.0;
  const Vector row = gamma.rowwise().sum();
  const Vector col = gamma.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    value += a(i) * entropy_at(e, row(i) / a(i));
  }
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    value += b(j) * entropy_at(e, col(j) / b(j));
  }
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      if (gamma(i, j) > 0.0) {
        if (!std::isfinite(cost(i, j))) return kInf;
        value += gamma(i, j) * cost(i, j);
      }
    }
  }
  return value;
}

// Exact minimization for supports with <= 2 atoms per side: cyclic
// golden-section coordinate descent on the (at most four) plan entries,
// from two deterministic starting plans.
EtResult et_exact_tiny(const StrippedEt& s, const EntropyFunction& e) {
  const Eigen::Index n = s.a.size(), m = s.b.size();
  const double mass_scale = s.a.sum() + s.b.sum();
  auto run = [&](Matrix gamma) {
    double best = et_objective(gamma, s.a, s.b, s.cost, e);
    for (int sweep = 0; sweep < 400; ++sweep) {
      const double before = best;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
          if (!std::isfinite(s.cost(i, j))) continue;
          auto coord = [&](double g) {
            Matrix trial = gamma;
            trial(i, j) = g;
            return et_objective(trial, s.a, s.b, s.cost, e);
          };
          double hi = std::max(1.0, 4.0 * mass_scale);
          gamma(i, j) = [&] {
            // locate the best value of the convex section
            double glo = 0.0, ghi = hi;
            const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
            double c = ghi - phi * ghi, d = phi * ghi;
            double fc = coord(c), fd = coord(d);
            for (int it = 0; it < 120; ++it) {
              if (fc <= fd) {
                ghi = d;
                d = c;
                fd = fc;
                c = ghi - phi * (ghi - glo);
                fc = coord(c);
              } else {
                glo = c;
                c = d;
                fc = fd;
                d = glo + phi * (ghi - glo);
                fd = coord(d);
              }
            }
            const double mid = 0.5 * (glo + ghi);
            return coord(0.0) <= coord(mid) ? 0.0 : mid;
          }();
          best = et_objective(gamma, s.a, s.b, s.cost, e);
        }
      }
      if (before - best <= 1e-14 * (1.0 + std::abs(best))) break;
    }
    return std::make_pair(gamma, best);
  };

  Matrix start0 = Matrix::Zero(n, m);
  Matrix start1 = Matrix::Zero(n, m);
  for (Eigen::Index k = 0; k < std::min(n, m); ++k) {
    if (std::isfinite(s.cost(k, k))) {
      start1(k, k) = std::min(s.a(k), s.b(k));
    }
  }
  const auto r0 = run(start0);
  const auto r1 = run(start1);
  EtResult out;
  out.value = std::min(r0.second, r1.second);
  return out;
}

struct UotOptions {
  int max_iterations = 500000;
  double change_tol = 1e-13;
};

Vector lse_rows(const Matrix& s) {
  Vector mx = s.rowwise().maxCoeff();
  Vector out(s.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (!std::isfinite(mx(i))) {
      out(i) = -kInf;
      continue;
    }
    double acc = 0.0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      acc += std::exp(s(i, j) - mx(i));
    }
    out(i) = mx(i) + std::log(acc);
  }
  return out;
}

// Log-domain scaling iterations for the KL-penalized problem, with the
// epsilon-scaling schedule eps_k = max(eps, 0.5^k).
EtResult et_sinkhorn_kl(const StrippedEt& s, const EntropyFunction& e,
                        double eps, const UotOptions& opts) {
  const Vector log_a = s.a.array().log();
  const Vector log_b = s.b.array().log();
  Vector f = Vector::Zero(s.a.size());
  Vector g = Vector::Zero(s.b.size());

  std::vector<double> schedule;
  for (double ek = 0.5; ek > eps; ek *= 0.5) schedule.push_back(ek);
  schedule.push_back(eps);

  int total_it = 0;
  double change = kInf;
  for (size_t stage = 0; stage < schedule.size(); ++stage) {
    const double ek = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    const int budget = last ? opts.max_iterations : 60;
    for (int it = 0; it < budget; ++it, ++total_it) {
      const Vector f_old = f;
      const Vector g_old = g;
      Matrix sm = ((-s.cost).rowwise() + g.transpose()) / ek;
      f = (ek / (1.0 + ek)) * (log_a - lse_rows(sm));
      Matrix st = ((-s.cost.transpose()).rowwise() + f.transpose()) / ek;
      g = (ek / (1.0 + ek)) * (log_b - lse_rows(st));
      change = std::max((f - f_old).cwiseAbs().maxCoeff(),
                        (g - g_old).cwiseAbs().maxCoeff());
      const double scale =
          1.0 + std::max(f.cwiseAbs().maxCoeff(), g.cwiseAbs().maxCoeff());
      if (change <= opts.change_tol * scale) break;
    }
  }

  Matrix gamma(s.a.size(), s.b.size());
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      gamma(i, j) = std::isfinite(s.cost(i, j))
                        ? std::exp((f(i) + g(j) - s.cost(i, j)) / eps)
                        : 0.0;
    }
  }
  EtResult out;
  out.value = et_objective(gamma, s.a, s.b, s.cost, e);
  out.iterations = total_it;
  out.residual = change;
  const double scale =
      1.0 + std::max(f.cwiseAbs().maxCoeff(), g.cwiseAbs().maxCoeff());
  out.converged = change <= opts.change_tol * scale;
  return out;
}

}  // namespace

EntropyFunction kl_entropy() {
  EntropyFunction e;
  e.f = [](double t) {
    if (t < 0.0) return kInf;
    if (t == 0.0) return 1.0;
    return t * std::log(t) + 1.0 - t;
  };
  e.f_at_zero = 1.0;
  e.f_inf_slope = kInf;
  e.is_kl = true;
  return e;
}

EntropyFunction tv_entropy() {
  EntropyFunction e;
  e.f = [](double t) { return t < 0.0 ? kInf : std::abs(t - 1.0); };
  e.f_at_zero = 1.0;
  e.f_inf_slope = 1.0;
  return e;
}

double entropy_convexity_violation(const EntropyFunction& entropy) {
  double worst = 0.0;
  for (int i = 0; i <= 60; ++i) {
    for (int j = i + 1; j <= 60; ++j) {
      const double s = 0.1 * i;
      const double t = 0.1 * j;
      const double fs = entropy_at(entropy, s);
      const double ft = entropy_at(entropy, t);
      const double fm = entropy_at(entropy, 0.5 * (s + t));
      if (std::isfinite(fs) && std::isfinite(ft)) {
        worst = std::max(worst, fm - 0.5 * (fs + ft));
      }
    }
  }
  return worst;
}

EtProblem hk_problem() {
  EtProblem p;
  p.entropy = kl_entropy();
  p.cost = [](const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
    const double d = (x - y).norm();
    if (d >= kPi / 2.0) return kInf;
    return -2.0 * std::log(std::cos(d));
  };
  return p;
}

double f_divergence(const DiscreteMeasure& gamma_marginal,
                    const DiscreteMeasure& mu,
                    const EntropyFunction& entropy) {
  const DiscreteMeasure g = merge_duplicates(gamma_marginal);
  const DiscreteMeasure m = merge_duplicates(mu);
  if (g.size() > 0 && m.size() > 0 && g.dim() != m.dim()) {
    throw std::invalid_argument("f_divergence: dimension mismatch");
  }
  std::map<std::vector<double>, double> mu_atoms;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Eigen::RowVectorXd p = m.point(i);
    mu_atoms[std::vector<double>(p.data(), p.data() + p.size())] = m.weight(i);
  }
  double value = 0.0;
  double singular = 0.0;
  std::map<std::vector<double>, double> gamma_atoms;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const Eigen::RowVectorXd p = g.point(i);
    const std::vector<double> key(p.data(), p.data() + p.size());
    gamma_atoms[key] = g.weight(i);
    if (mu_atoms.find(key) == mu_atoms.end()) singular += g.weight(i);
  }
  for (const auto& [key, w] : mu_atoms) {
    const auto it = gamma_atoms.find(key);
    const double ratio = (it == gamma_atoms.end()) ? 0.0 : it->second / w;
    value += w * entropy_at(entropy, ratio);
    if (std::isinf(value)) return kInf;
  }
  if (singular > 0.0) {
    if (std::isinf(entropy.f_inf_slope)) return kInf;
    value += entropy.f_inf_slope * singular;
  }
  return value;
}

EtResult et_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  const EtProblem& problem, double eps) {
  if (eps < 0.0) throw std::invalid_argument("et_value: eps must be >= 0");
  EtResult out;
  const double ma = drop_zero_atoms(mu).total_mass();
  const double mb = drop_zero_atoms(nu).total_mass();
  if (ma == 0.0 && mb == 0.0) return out;
  if (ma == 0.0 || mb == 0.0) {
    // the plan is supported on supp(mu) x supp(nu); against the null
    // measure only diagonal shrinkage survives, solved per unit mass
    out.value = (ma + mb) * null_unit_value(problem.entropy);
    return out;
  }
  const StrippedEt s = strip_et(mu, nu, problem);
  if (s.empty) {
    out.value = s.removed;
    return out;
  }
  if (eps == 0.0) {
    if (s.a.size() > 2 || s.b.size() > 2) {
      throw std::invalid_argument(
          "et_value: eps = 0 only for supports with <= 2 atoms per side");
    }
    out = et_exact_tiny(s, problem.entropy);
  } else {
    if (!problem.entropy.is_kl) {
      throw std::invalid_argument(
          "et_value: the entropic path supports the KL entropy only");
    }
    out = et_sinkhorn_kl(s, problem.entropy, eps, UotOptions{});
  }
  out.value += s.removed;
  return out;
}

EtResult hk_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     double eps) {
  EtResult r = et_value(mu, nu, hk_problem(), eps);
  r.value = std::sqrt(std::max(0.0, r.value));
  return r;
}

double et_null_bound(const EntropyFunction& entropy) {
  return std::min(entropy.f_at_zero, entropy.f_inf_slope);
}

MassProfile compare_geodesic_masses(const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu, int steps,
                                    double eps) {
  if (steps < 1) {
    throw std::invalid_argument("compare_geodesic_masses: steps must be >= 1");
  }
  const double m0 = mu.total_mass();
  const double m1 = nu.total_mass();
  const EtResult hk = et_value(mu, nu, hk_problem(), eps);
  MassProfile profile;
  profile.eps = eps;
  profile.hk_sq = hk.value;
  profile.iterations = hk.iterations;
  profile.residual = hk.residual;
  profile.converged = hk.converged;
  profile.t.resize(steps + 1);
  profile.mass_wop.resize(steps + 1);
  profile.mass_hk.resize(steps + 1);
  const double correlation = m0 + m1 - hk.value;  // 2 K in the cone identity
  for (int k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    profile.t(k) = t;
    profile.mass_wop(k) = (1.0 - t) * m0 + t * m1;
    profile.mass_hk(k) =
        (1.0 - t) * (1.0 - t) * m0 + t * t * m1 + t * (1.0 - t) * correlation;
  }
  return profile;
}

}  // namespace wop
