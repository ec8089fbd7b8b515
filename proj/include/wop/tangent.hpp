#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "wop/measures.hpp"

namespace wop {

/// Tangent vector at a base measure: one velocity per support atom plus
/// a scalar mass rate.
struct TangentVector {
  Matrix u;  // atoms x dim
  double m_prime = 0.0;
};

/// Functional with a first variation:
///   F(nu) = F(mu) + int dF/dmu (mu) d(nu - mu) + o(WOP(mu, nu)).
/// value evaluates F itself, variation evaluates dF/dmu(mu) at a point,
/// variation_grad its spatial gradient. linear_growth_certified is a
/// caller assertion that |grad dF/dmu| grows at most linearly.
struct FirstVariationOracle {
  std::function<double(const DiscreteMeasure&)> value;
  std::function<double(const DiscreteMeasure&, const Eigen::RowVectorXd&)>
      variation;
  std::function<Eigen::RowVectorXd(const DiscreteMeasure&,
                                   const Eigen::RowVectorXd&)>
      variation_grad;
  bool linear_growth_certified = false;
};

/// Tangent inner product at mu:
///   <v1,v2> = m'_1 m'_2
///     + int <m u_1 + m'_1 (x-x0), m u_2 + m'_2 (x-x0)> dmu_bar.
/// Requires a non-null base measure.
double inner_product(const TangentVector& v1, const TangentVector& v2,
                     const DiscreteMeasure& mu, const Vector& x0);

/// WOP gradient of F at mu:
///   m'_F = int dF/dmu dmu_bar - int <grad dF/dmu, x-x0> dmu_bar,
///   u_F(x) = (grad dF/dmu(x) - m'_F (x-x0)) / m_mu.
/// Requires positive mass and the growth certificate.
TangentVector wop_gradient(const FirstVariationOracle& F,
                           const DiscreteMeasure& mu, const Vector& x0);

/// Chain-rule check: lhs = [F(mu_dt) - F(mu)] / dt along the curve that
/// moves atoms by dt*u and the mass by dt*m'; rhs = <grad F, v>_mu.
/// |lhs - rhs| = O(dt).
std::pair<double, double> directional_derivative_check(
    const FirstVariationOracle& F, const DiscreteMeasure& mu,
    const TangentVector& v, const Vector& x0, double dt);

/// Functional on probability measures with its first variation; input of
/// extend_functional.
struct ProbabilityFunctional {
  std::function<double(const DiscreteMeasure&)> value;
  std::function<double(const DiscreteMeasure&, const Eigen::RowVectorXd&)>
      variation;
  std::function<Eigen::RowVectorXd(const DiscreteMeasure&,
                                   const Eigen::RowVectorXd&)>
      variation_grad;
  bool linear_growth_certified = false;
};

/// Mass-conservative extension F~(mu) = F(T_{m_mu}#mu_bar). The WOP
/// gradient of the result has zero mass rate, and F~ agrees with F on
/// probability measures.
FirstVariationOracle extend_functional(const ProbabilityFunctional& F,
                                       const Vector& x0);

/// Sampled check of the conservative-functional characterization:
/// true iff |m'_F(mu)| <= tol on every sample.
bool is_conservative(const FirstVariationOracle& F,
                     const std::vector<DiscreteMeasure>& samples,
                     const Vector& x0, double tol);

/// Explicit-Euler gradient-flow path on particles.
struct FlowPath {
  Vector times;
  std::vector<DiscreteMeasure> measures;
  Vector masses;
  Vector f_values;
  bool halted_early = false;  // mass would have dropped to <= 0
};

/// x_i <- x_i - dt u_F(x_i); m <- m - dt m'_F with weights rescaled
/// uniformly. Halts (flagged) before the mass reaches zero.
FlowPath flow_particles(const FirstVariationOracle& F,
                        const DiscreteMeasure& mu0, const Vector& x0,
                        double dt, int steps);

/// Explicit finite-difference path of d_t nu = (1/m^2) Laplacian(nu) on
/// a uniform 1-d grid with zero-flux boundaries; the 1/m^2 factor is
/// refreshed from the current grid mass every step.
struct GridFlowResult {
  std::vector<Vector> frames;  // first and last always recorded
  Vector frame_times;
  Vector masses;  // one per step boundary (steps + 1 values)
  double dx = 0.0;
};

/// Requires rho0 >= -1e-12 entrywise and the stability bound
/// dt <= dx^2 m^2 / 2 for the initial mass m. frame_stride > 0 records
/// every stride-th frame.
GridFlowResult heat_flow_grid(const Vector& rho0, double dt, int steps,
                              double dx, int frame_stride = 0);

/// Boltzmann entropy of the extension to positive measures, evaluated on
/// a grid density: int log(rho_bar) drho_bar - d log(m), d = 1.
double boltzmann_entropy_grid(const Vector& rho, double dx);

// Closed-form functionals from the gradient corollaries.

/// F(mu) = m_mu. Gradient: m' = 1, u(x) = -(x-x0)/m.
FirstVariationOracle total_mass_functional();
/// F(mu) = m^2 (1 + M_x0(mu_bar)) / 2 = WOP^2(mu, 0_M) / 2.
/// Gradient: m' = m, u = 0.
FirstVariationOracle half_squared_distance_to_null(const Vector& x0);
/// F(mu) = m^2 M_x0(mu_bar) / 2. Gradient: m' = 0, u(x) = x - x0.
FirstVariationOracle half_lifted_moment(const Vector& x0);
/// F(mu) = M_x0(mu_bar) / 2. Gradient: m' = -M_x0(mu_bar)/m,
/// u(x) = (1 + M_x0(mu_bar)) (x-x0) / m^2.
FirstVariationOracle half_normalized_moment(const Vector& x0);

}  // namespace wop
