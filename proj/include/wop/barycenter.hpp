#pragma once

#include <vector>

#include "wop/measures.hpp"

namespace wop {

struct BarycenterEntry {
  double lambda = 0.0;
  DiscreteMeasure measure;
};

/// Finite mixture sum_i lambda_i delta_{mu_i} with positive weights
/// summing to 1 (checked to 1e-12), plus the reference point used when
/// evaluating the variance (the minimizer itself never depends on it).
struct BarycenterProblem {
  BarycenterProblem(std::vector<BarycenterEntry> entries, Vector x0);
  std::vector<BarycenterEntry> entries;
  Vector x0;
};

/// V(mu) = sum_i lambda_i WOP^2_{x0}(mu, mu_i).
double variance(const DiscreteMeasure& mu, const BarycenterProblem& problem);

struct BarycenterResult {
  DiscreteMeasure measure;
  bool converged = true;
  int iterations = 0;
  bool all_inputs_null = false;
};

/// WOP barycenter: mass sum_i lambda_i m_i, shape the W2 barycenter of
/// the normalized inputs with weights proportional to lambda_i m_i.
BarycenterResult wop_barycenter(const BarycenterProblem& problem);

/// Free-support W2 barycenter of probability measures (exact couplings +
/// barycentric projection fixed point; quantile averaging in 1-d, where
/// the result is exact). weights must be positive and sum to 1.
BarycenterResult w2_barycenter(const Vector& weights,
                               const std::vector<DiscreteMeasure>& measures,
                               Eigen::Index support_size = 0);

/// Exact 1-d W2 barycenter by averaging quantile functions on the merged
/// cumulative grid.
DiscreteMeasure quantile_barycenter_1d(
    const Vector& weights, const std::vector<DiscreteMeasure>& measures);

}  // namespace wop
