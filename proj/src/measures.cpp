#include "wop/measures.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace wop {

DiscreteMeasure::DiscreteMeasure(Matrix points, Vector weights)
    : points_(std::move(points)),
      weights_(std::move(weights)),
      dim_(points_.cols()) {
  if (points_.rows() != weights_.size()) {
    throw std::invalid_argument("DiscreteMeasure: atom/weight count mismatch");
  }
  if (!points_.allFinite() || !weights_.allFinite()) {
    throw std::invalid_argument("DiscreteMeasure: non-finite entry");
  }
  if (weights_.size() > 0 && weights_.minCoeff() < 0.0) {
    throw std::invalid_argument("DiscreteMeasure: negative weight");
  }
}

DiscreteMeasure DiscreteMeasure::null_measure(Eigen::Index dim) {
  return DiscreteMeasure(Matrix(0, dim), Vector(0));
}

DiscreteMeasure DiscreteMeasure::dirac(const Vector& x, double mass) {
  Matrix pts(1, x.size());
  pts.row(0) = x.transpose();
  Vector w(1);
  w(0) = mass;
  return DiscreteMeasure(std::move(pts), std::move(w));
}

DiscreteMeasure normalize(const DiscreteMeasure& mu, const Vector& x0) {
  const double m = mu.total_mass();
  if (m > 0.0) {
    return DiscreteMeasure(mu.points(), mu.weights() / m);
  }
  return DiscreteMeasure::dirac(x0, 1.0);
}

DiscreteMeasure pushforward_dilation(const DiscreteMeasure& mu, double a,
                                     const Vector& x0) {
  if (!(a >= 0.0)) {
    throw std::invalid_argument("pushforward_dilation: a must be >= 0");
  }
  if (mu.dim() != x0.size()) {
    throw std::invalid_argument("pushforward_dilation: dimension mismatch");
  }
  Matrix pts = ((mu.points().rowwise() - x0.transpose()) * a).rowwise() +
               x0.transpose();
  return DiscreteMeasure(std::move(pts), mu.weights());
}

double moment2(const DiscreteMeasure& mu, const Vector& x0) {
  if (mu.size() == 0) return 0.0;
  if (mu.dim() != x0.size()) {
    throw std::invalid_argument("moment2: dimension mismatch");
  }
  const Matrix centered = mu.points().rowwise() - x0.transpose();
  return (centered.rowwise().squaredNorm().array() * mu.weights().array())
      .sum();
}

bool in_mk(const DiscreteMeasure& mu, double K, const Vector& x0) {
  if (!(K > 0.0)) throw std::invalid_argument("in_mk: K must be > 0");
  return moment2(mu, x0) <= K * mu.total_mass();
}

DiscreteMeasure scaled(const DiscreteMeasure& mu, double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("scaled: a must be >= 0");
  return DiscreteMeasure(mu.points(), mu.weights() * a);
}

DiscreteMeasure drop_zero_atoms(const DiscreteMeasure& mu) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) > 0.0) keep.push_back(i);
  }
  Matrix pts(static_cast<Eigen::Index>(keep.size()), mu.dim());
  Vector w(static_cast<Eigen::Index>(keep.size()));
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(keep.size()); ++k) {
    pts.row(k) = mu.points().row(keep[k]);
    w(k) = mu.weight(keep[k]);
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

namespace {

bool lex_less(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a(k) < b(k)) return true;
    if (a(k) > b(k)) return false;
  }
  return false;
}

}  // namespace

DiscreteMeasure merge_duplicates(const DiscreteMeasure& mu) {
  const DiscreteMeasure m = drop_zero_atoms(mu);
  std::vector<Eigen::Index> order(m.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return lex_less(m.point(a), m.point(b));
  });
  std::vector<Eigen::RowVectorXd> pts;
  std::vector<double> ws;
  for (Eigen::Index idx : order) {
    if (!pts.empty() && pts.back() == m.point(idx)) {
      ws.back() += m.weight(idx);
    } else {
      pts.push_back(m.point(idx));
      ws.push_back(m.weight(idx));
    }
  }
  Matrix out_pts(static_cast<Eigen::Index>(pts.size()), m.dim());
  Vector out_w(static_cast<Eigen::Index>(ws.size()));
  for (size_t k = 0; k < pts.size(); ++k) {
    out_pts.row(static_cast<Eigen::Index>(k)) = pts[k];
    out_w(static_cast<Eigen::Index>(k)) = ws[k];
  }
  return DiscreteMeasure(std::move(out_pts), std::move(out_w));
}

bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b,
                  double tol) {
  if (a.dim() != b.dim()) return false;
  const DiscreteMeasure ca = merge_duplicates(a);
  const DiscreteMeasure cb = merge_duplicates(b);
  if (ca.size() != cb.size()) return false;
  for (Eigen::Index i = 0; i < ca.size(); ++i) {
    if ((ca.point(i) - cb.point(i)).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(ca.weight(i) - cb.weight(i)) > tol) return false;
  }
  return true;
}

}  // namespace wop
