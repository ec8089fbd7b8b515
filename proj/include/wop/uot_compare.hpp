#pragma once

#include <functional>

#include "wop/measures.hpp"

namespace wop {

/// Csiszar entropy: convex l.s.c. f with f(1) = 0, plus its boundary
/// data f(0) and the recession slope f'_inf = lim f(t)/t (may be +inf).
struct EntropyFunction {
  std::function<double(double)> f;
  double f_at_zero = 0.0;
  double f_inf_slope = 0.0;
  bool is_kl = false;  // exactly t log t + 1 - t (closed-form prox)
};

/// t log t + 1 - t (the Hellinger-Kantorovich entropy).
EntropyFunction kl_entropy();
/// |t - 1| (total-variation type).
EntropyFunction tv_entropy();

/// Samples the midpoint convexity inequality of f on a grid; returns the
/// largest violation (<= 1e-12 for a valid entropy).
double entropy_convexity_violation(const EntropyFunction& entropy);

/// Entropy-transport problem: marginal entropy plus a l.s.c. cost with
/// c(x,x) = 0 (+inf entries allowed).
struct EtProblem {
  EntropyFunction entropy;
  std::function<double(const Eigen::RowVectorXd&, const Eigen::RowVectorXd&)>
      cost;
};

/// The HK problem: KL entropy with cost -2 log(cos(|x-y| ^ pi/2)),
/// clamped to +inf at |x-y| >= pi/2.
EtProblem hk_problem();

/// D_f(gamma | mu) for discrete measures on a common support universe:
/// atoms are matched by exact coordinates; gamma-mass outside supp(mu)
/// is charged at the recession slope (0 * inf = 0 convention).
double f_divergence(const DiscreteMeasure& gamma_marginal,
                    const DiscreteMeasure& mu, const EntropyFunction& entropy);

struct EtResult {
  double value = 0.0;
  bool converged = true;
  int iterations = 0;
  double residual = 0.0;
};

/// inf_gamma D_f(P0#gamma|mu) + D_f(P1#gamma|nu) + sum gamma_ij c_ij.
/// eps > 0 runs log-domain unbalanced Sinkhorn with epsilon-scaling
/// (KL entropy only); eps = 0 is allowed for supports with <= 2 atoms
/// per side (direct minimization) and for null inputs (closed form).
/// Non-convergence is reported through the flag and residual.
EtResult et_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  const EtProblem& problem, double eps);

/// sqrt of et_value for the HK problem.
EtResult hk_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     double eps);

/// min(f(0), f'_inf): upper bound for ET(mu, 0_M) over probability mu.
double et_null_bound(const EntropyFunction& entropy);

/// Mass profiles along the two interpolations between mu and nu.
/// m_wop is the exact linear rule of the WOP geodesic. m_hk evaluates
/// the quadratic cone identity
///   m(t) = (1-t)^2 m_mu + t^2 m_nu + t(1-t)(m_mu + m_nu - HK^2)
/// with HK^2 estimated by the entropic solver, so it is an approximation
/// of the true HK geodesic mass exactly to the extent that HK^2 is.
struct MassProfile {
  Vector t;
  Vector mass_wop;
  Vector mass_hk;
  double eps = 0.0;
  double hk_sq = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

MassProfile compare_geodesic_masses(const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu, int steps,
                                    double eps);

}  // namespace wop
