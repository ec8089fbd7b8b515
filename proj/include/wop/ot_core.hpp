#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "wop/measures.hpp"

namespace wop {

/// Thrown when an iterative solver fails to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations(iterations), residual(residual) {}
  int iterations;
  double residual;
};

/// Transport plan between two discrete measures. Row sums reproduce the
/// source weights and column sums the target weights (1e-12 relative for
/// the exact solver, 1e-9 after entropic rounding).
struct Coupling {
  Matrix matrix;  // n x m, entries >= 0
};

/// Kantorovich potentials. Feasible: phi_i + psi_j <= cost(x_i, y_j) on
/// every support pair.
struct DualPotentials {
  Vector phi;  // per source atom
  Vector psi;  // per target atom
};

struct TransportResult {
  double cost = 0.0;
  Coupling coupling;
  DualPotentials duals;
  int iterations = 0;
  double residual = 0.0;
};

/// Exact solve of min_pi sum pi_ij cost(i,j) over couplings of the two
/// weight vectors (network simplex). Requires equal positive total
/// masses; zero-weight atoms are allowed and get zero rows/columns plus
/// feasible dual fill-in.
TransportResult solve_exact_lp(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu, const Matrix& cost);

/// Exact balanced 2-Wasserstein: squared-distance ground cost. Returns
/// the squared distance as cost.
TransportResult solve_w2_exact(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu);

struct SinkhornOptions {
  double marginal_tol = 1e-9;
  int max_iterations = 100000;
};

/// Log-domain Sinkhorn with epsilon regularization. The returned cost is
/// the transport part sum pi_ij c_ij of the plan after rounding to the
/// transport polytope; returned duals are made feasible by c-transform.
/// Throws SolverError when the marginal residual does not reach
/// tolerance within the iteration budget.
TransportResult solve_w2_entropic(const DiscreteMeasure& mu,
                                  const DiscreteMeasure& nu, double epsilon,
                                  const SinkhornOptions& opts = {});

/// sum_ij pi_ij * cost_fn(x_i, y_j).
double coupling_cost(
    const Coupling& pi, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
    const std::function<double(const Eigen::RowVectorXd&,
                               const Eigen::RowVectorXd&)>& cost_fn);

/// Pairwise |x_i - y_j|^2 between the atoms of two measures.
Matrix pairwise_sq_dist(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Pairwise |x_i - y_j|^p.
Matrix pairwise_pow_dist(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         double p);

}  // namespace wop
