#pragma once

#include <Eigen/Dense>

namespace wop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Discrete positive measure on R^d: a weighted point cloud.
///
/// Atoms are the rows of points(); weights are nonnegative masses.
/// The null measure 0_M is the empty support list (size() == 0) and is a
/// legitimate point of the space; every operation accepts it.
/// Instances are immutable after construction.
class DiscreteMeasure {
 public:
  /// Null measure in dimension 0. Prefer null_measure(dim) when the
  /// ambient dimension matters.
  DiscreteMeasure() : points_(0, 0), weights_(0), dim_(0) {}

  /// Validating constructor. points is n x d (one atom per row).
  /// Throws std::invalid_argument on negative weights, non-finite
  /// entries, or a row/weight count mismatch.
  DiscreteMeasure(Matrix points, Vector weights);

  static DiscreteMeasure null_measure(Eigen::Index dim);
  static DiscreteMeasure dirac(const Vector& x, double mass);

  Eigen::Index size() const { return weights_.size(); }
  Eigen::Index dim() const { return dim_; }
  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  Eigen::RowVectorXd point(Eigen::Index i) const { return points_.row(i); }
  double weight(Eigen::Index i) const { return weights_(i); }

  double total_mass() const { return weights_.sum(); }
  bool is_null() const { return size() == 0 || total_mass() == 0.0; }

 private:
  Matrix points_;
  Vector weights_;
  Eigen::Index dim_;
};

/// mu / m_mu when m_mu > 0, delta_{x0} otherwise.
DiscreteMeasure normalize(const DiscreteMeasure& mu, const Vector& x0);

/// Pushforward by the dilation T_a(x) = a (x - x0) + x0. Requires a >= 0.
DiscreteMeasure pushforward_dilation(const DiscreteMeasure& mu, double a,
                                     const Vector& x0);

/// Second-order moment about x0: sum_i w_i |x_i - x0|^2.
double moment2(const DiscreteMeasure& mu, const Vector& x0);

/// Membership in M_K: moment2(mu, x0) <= K * m_mu. Requires K > 0.
bool in_mk(const DiscreteMeasure& mu, double K, const Vector& x0);

/// a * mu (weights scaled, atoms unchanged). Requires a >= 0.
DiscreteMeasure scaled(const DiscreteMeasure& mu, double a);

/// Copy with zero-weight atoms removed. Exact-LP and Sinkhorn marginals
/// must be strictly positive, so solvers strip before solving.
DiscreteMeasure drop_zero_atoms(const DiscreteMeasure& mu);

/// Canonical form: atoms sorted lexicographically, exact duplicates
/// merged (weights added), zero-weight atoms dropped.
DiscreteMeasure merge_duplicates(const DiscreteMeasure& mu);

/// Atom-wise comparison of canonical forms within tol on both
/// coordinates and weights.
bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b,
                  double tol);

}  // namespace wop
