#include "wop/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wop/ot_core.hpp"
#include "wop/wop_metric.hpp"

namespace wop {

BarycenterProblem::BarycenterProblem(std::vector<BarycenterEntry> e, Vector x)
    : entries(std::move(e)), x0(std::move(x)) {
  if (entries.empty()) {
    throw std::invalid_argument("BarycenterProblem: no entries");
  }
  double sum = 0.0;
  for (const BarycenterEntry& entry : entries) {
    if (!(entry.lambda > 0.0)) {
      throw std::invalid_argument("BarycenterProblem: lambda must be > 0");
    }
    sum += entry.lambda;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("BarycenterProblem: lambdas must sum to 1");
  }
}

double variance(const DiscreteMeasure& mu, const BarycenterProblem& problem) {
  double v = 0.0;
  for (const BarycenterEntry& e : problem.entries) {
    const WopResult r = wop_distance(mu, e.measure, problem.x0);
    v += e.lambda * r.distance * r.distance;
  }
  return v;
}

namespace {

bool all_one_dimensional(const std::vector<DiscreteMeasure>& ms) {
  return std::all_of(ms.begin(), ms.end(),
                     [](const DiscreteMeasure& m) { return m.dim() == 1; });
}

// Sorted atoms with cumulative weights, for quantile lookups.
struct SortedCdf {
  std::vector<double> x;
  std::vector<double> cum;  // cum[k] = mass of atoms 0..k
};

SortedCdf sorted_cdf(const DiscreteMeasure& m) {
  const DiscreteMeasure c = merge_duplicates(m);
  SortedCdf s;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    acc += c.weight(i);
    s.x.push_back(c.points()(i, 0));
    s.cum.push_back(acc);
  }
  if (!s.cum.empty()) s.cum.back() = 1.0;  // kill float drift at the top
  return s;
}

}  // namespace

DiscreteMeasure quantile_barycenter_1d(
    const Vector& weights, const std::vector<DiscreteMeasure>& measures) {
  std::vector<SortedCdf> cdfs;
  std::vector<double> levels = {0.0, 1.0};
  for (const DiscreteMeasure& m : measures) {
    cdfs.push_back(sorted_cdf(m));
    for (double c : cdfs.back().cum) levels.push_back(std::min(c, 1.0));
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<double> pts, ws;
  std::vector<size_t> cursor(cdfs.size(), 0);
  for (size_t l = 0; l + 1 < levels.size(); ++l) {
    const double lo = levels[l];
    const double hi = levels[l + 1];
    if (!(hi > lo)) continue;
    // the quantile of each input is constant on (lo, hi)
    double position = 0.0;
    for (size_t i = 0; i < cdfs.size(); ++i) {
      while (cursor[i] + 1 < cdfs[i].cum.size() &&
             cdfs[i].cum[cursor[i]] <= lo + 1e-15 * (1.0 + lo)) {
        ++cursor[i];
      }
      position += weights(static_cast<Eigen::Index>(i)) *
                  cdfs[i].x[cursor[i]];
    }
    if (!pts.empty() && pts.back() == position) {
      ws.back() += hi - lo;
    } else {
      pts.push_back(position);
      ws.push_back(hi - lo);
    }
  }
  Matrix out_pts(static_cast<Eigen::Index>(pts.size()), 1);
  Vector out_w(static_cast<Eigen::Index>(ws.size()));
  for (size_t k = 0; k < pts.size(); ++k) {
    out_pts(static_cast<Eigen::Index>(k), 0) = pts[k];
    out_w(static_cast<Eigen::Index>(k)) = ws[k];
  }
  return DiscreteMeasure(std::move(out_pts), std::move(out_w));
}

BarycenterResult w2_barycenter(const Vector& weights,
                               const std::vector<DiscreteMeasure>& measures,
                               Eigen::Index support_size) {
  if (measures.empty() ||
      weights.size() != static_cast<Eigen::Index>(measures.size())) {
    throw std::invalid_argument("w2_barycenter: bad inputs");
  }
  if (weights.minCoeff() <= 0.0 || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "w2_barycenter: weights must be positive and sum to 1");
  }
  for (const DiscreteMeasure& m : measures) {
    if (std::abs(m.total_mass() - 1.0) > 1e-9) {
      throw std::invalid_argument(
          "w2_barycenter: inputs must be probability measures");
    }
  }
  BarycenterResult out;
  if (measures.size() == 1) {
    out.measure = measures[0];
    return out;
  }
  if (all_one_dimensional(measures)) {
    out.measure = quantile_barycenter_1d(weights, measures);
    return out;
  }

  // free-support fixed point
  std::vector<DiscreteMeasure> stripped;
  stripped.reserve(measures.size());
  for (const DiscreteMeasure& m : measures) {
    stripped.push_back(drop_zero_atoms(m));
  }
  size_t largest = 0;
  for (size_t i = 1; i < stripped.size(); ++i) {
    if (stripped[i].size() > stripped[largest].size()) largest = i;
  }
  if (support_size <= 0) support_size = stripped[largest].size();

  const Eigen::Index dim = stripped[0].dim();
  Eigen::RowVectorXd global_mean = Eigen::RowVectorXd::Zero(dim);
  for (size_t i = 0; i < stripped.size(); ++i) {
    global_mean += weights(static_cast<Eigen::Index>(i)) *
                   (stripped[i].weights().transpose() * stripped[i].points());
  }
  // seed: the largest input's configuration (atoms and weights)
  // recentered at the weighted mean of all inputs
  Matrix support(support_size, dim);
  Vector support_weights(support_size);
  const Eigen::RowVectorXd seed_mean =
      stripped[largest].weights().transpose() * stripped[largest].points();
  for (Eigen::Index k = 0; k < support_size; ++k) {
    const Eigen::Index src = k % stripped[largest].size();
    support.row(k) = stripped[largest].point(src) - seed_mean + global_mean;
    support_weights(k) = stripped[largest].weight(src);
  }
  support_weights /= support_weights.sum();

  constexpr double kMoveTol = 1e-8;
  constexpr int kMaxIterations = 500;
  int it = 0;
  bool converged = false;
  for (; it < kMaxIterations; ++it) {
    DiscreteMeasure candidate(support, support_weights);
    Matrix next = Matrix::Zero(support_size, dim);
    for (size_t i = 0; i < stripped.size(); ++i) {
      const TransportResult tr = solve_w2_exact(candidate, stripped[i]);
      // barycentric projection of the plan, row-normalized
      Matrix targets = tr.coupling.matrix * stripped[i].points();
      const Vector row = tr.coupling.matrix.rowwise().sum();
      for (Eigen::Index k = 0; k < support_size; ++k) {
        if (row(k) > 0.0) targets.row(k) /= row(k);
        else targets.row(k) = support.row(k);
      }
      next += weights(static_cast<Eigen::Index>(i)) * targets;
    }
    const double movement = (next - support).cwiseAbs().maxCoeff();
    support = next;
    if (movement < kMoveTol) {
      converged = true;
      ++it;
      break;
    }
  }
  out.measure = DiscreteMeasure(support, support_weights);
  out.converged = converged;
  out.iterations = it;
  return out;
}

BarycenterResult wop_barycenter(const BarycenterProblem& problem) {
  double total_mass = 0.0;
  for (const BarycenterEntry& e : problem.entries) {
    total_mass += e.lambda * e.measure.total_mass();
  }
  BarycenterResult out;
  if (total_mass == 0.0) {
    Eigen::Index dim = problem.x0.size();
    out.measure = DiscreteMeasure::null_measure(dim);
    out.all_inputs_null = true;
    return out;
  }
  std::vector<DiscreteMeasure> shapes;
  std::vector<double> shape_weights;
  for (const BarycenterEntry& e : problem.entries) {
    const double mass = e.measure.total_mass();
    if (mass > 0.0) {
      shapes.push_back(normalize(e.measure, problem.x0));
      shape_weights.push_back(e.lambda * mass / total_mass);
    }
  }
  const Vector w = Eigen::Map<const Vector>(
      shape_weights.data(), static_cast<Eigen::Index>(shape_weights.size()));
  BarycenterResult shape = w2_barycenter(w, shapes);
  out.measure = scaled(shape.measure, total_mass);
  out.converged = shape.converged;
  out.iterations = shape.iterations;
  return out;
}

}  // namespace wop
