#pragma once

#include <vector>

#include "wop/measures.hpp"
#include "wop/ot_core.hpp"

namespace wop {

/// One point of a WOP geodesic.
struct GeodesicSample {
  double t = 0.0;
  DiscreteMeasure measure;
  double mass = 0.0;    // (1-t) m0 + t m1, exact
  double lambda = 0.0;  // time reparametrization onto the W2 geodesic
  bool both_endpoints_null = false;
};

/// lambda_t = t m1 / ((1-t) m0 + t m1). Throws when the denominator
/// vanishes.
double lambda_reparam(double t, double m0, double m1);

/// WOP geodesic mu_t = m_t . mu_hat_{lambda_t} built once from the exact
/// optimal coupling between the normalized endpoints; samples at any t
/// share that coupling. The construction never uses a reference point,
/// so samples are identical for every x0.
class GeodesicInterpolator {
 public:
  GeodesicInterpolator(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                       const Vector& x0);

  /// Sample with endpoints returned as the original measures; interior
  /// samples live on the coupling support (one atom per plan entry).
  GeodesicSample at(double t) const;

  /// Same measure as at(t) but always in the coupling-support
  /// representation, including at t = 0 and t = 1; used for building
  /// admissible paths with a fixed atom correspondence.
  DiscreteMeasure at_support(double t) const;

  double mass0() const { return m0_; }
  double mass1() const { return m1_; }
  bool degenerate_null() const { return both_null_; }

 private:
  double lambda_at(double t) const;

  DiscreteMeasure mu0_, mu1_;
  double m0_ = 0.0, m1_ = 0.0;
  bool both_null_ = false;
  Matrix from_, to_;     // paired atoms of the coupling support
  Vector plan_weights_;  // normalized plan mass per pair
};

/// Convenience single-sample form. Requires t in [0,1]. Both endpoints
/// null yields the constant null path, flagged on the sample.
GeodesicSample geodesic(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                        double t, const Vector& x0);

/// Time-discretized path with a fixed atom correspondence. velocities[k]
/// and mass_rates[k] are the step rates on [times[k], times[k+1]]:
/// atoms move by velocities[k] * dt and the total mass by
/// mass_rates[k] * dt (this is what dynamic_action checks).
struct SourcedPath {
  Vector times;                          // strictly increasing, 0 to 1
  std::vector<DiscreteMeasure> measures;  // one per time, equal atom counts
  std::vector<Matrix> velocities;        // K matrices, atoms x dim
  Vector mass_rates;                     // K scalars
};

/// Samples the geodesic on K uniform steps; velocities are the forward
/// differences of the atom trajectories and the mass rate is the
/// constant m1 - m0.
SourcedPath sample_geodesic_path(const DiscreteMeasure& mu0,
                                 const DiscreteMeasure& mu1, int steps,
                                 const Vector& x0);

/// Trapezoidal approximation of the dynamic action
///   int_0^1 |m'_t|^2 + int |m_t u_t + m'_t (x - x0)|^2 dmu_bar_t dt.
/// Node velocities come from the step velocities: adjacent averages in
/// the interior, second-order one-sided extrapolation at the ends, which
/// makes the value second-order accurate in the step count on geodesic
/// paths. Throws when the path violates the per-step consistency
/// contract (tolerance 1e-6).
double dynamic_action(const SourcedPath& path, const Vector& x0);

/// WOP^2(mu_t, eta) - [(1-t) WOP^2(mu0, eta) + t WOP^2(mu1, eta)
///                     - t(1-t) WOP^2(mu0, mu1)].
/// Nonnegative up to solver noise (positive curvature in the sense of
/// Alexandrov).
double curvature_gap(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                     const DiscreteMeasure& eta, double t, const Vector& x0);

}  // namespace wop
