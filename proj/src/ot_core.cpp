#include "wop/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace wop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Network simplex for the dense transportation problem
//
//   min sum_ij C(i,j) x_ij   s.t.  sum_j x_ij = a_i,  sum_i x_ij = b_j,
//                                  x >= 0,
//
// on the bipartite graph with arcs i -> (n + j). The basis is a spanning
// tree over the n + m nodes; the initial tree comes from the northwest-
// corner rule, so no artificial arcs are needed and the node potentials
// stay on the scale of the costs. Pivoting uses block search for the
// entering arc and the first/second-path blocking rule for the leaving
// arc. After termination the tree flows are recomputed exactly by leaf
// elimination, which keeps the marginal error at the level of a few ulps
// of the input weights.
// ---------------------------------------------------------------------------
class TransportSimplex {
 public:
  TransportSimplex(const Vector& supply, const Vector& demand,
                   const Matrix& cost)
      : n_(supply.size()),
        m_(demand.size()),
        num_nodes_(n_ + m_),
        num_arcs_(n_ * m_),
        cost_(cost),
        supply_(supply),
        demand_(demand) {
    const double max_c = cost_.size() > 0 ? cost_.cwiseAbs().maxCoeff() : 0.0;
    opt_tol_ = 4.0 * std::numeric_limits<double>::epsilon() *
               static_cast<double>(num_nodes_) * (1.0 + max_c);
    block_size_ = std::max<Eigen::Index>(
        64, static_cast<Eigen::Index>(std::sqrt(double(num_arcs_))));
  }

  // Runs the simplex; fills flow matrix, potentials phi/psi and cost.
  void solve(Matrix& flow_out, Vector& phi, Vector& psi, double& cost_out,
             int& pivots_out) {
    init_northwest();
    rebuild_tree();

    const long max_pivots = 1000 + 64L * (num_arcs_ + num_nodes_);
    long pivots = 0;
    long degenerate_run = 0;
    Eigen::Index e;
    while ((e = find_entering()) >= 0) {
      if (++pivots > max_pivots) {
        throw SolverError("transport simplex: pivot limit exceeded",
                          static_cast<int>(pivots), 0.0);
      }
      const bool degenerate = pivot(e);
      degenerate_run = degenerate ? degenerate_run + 1 : 0;
      if (degenerate_run > 100 + 10L * num_nodes_) bland_mode_ = true;
      rebuild_tree();
    }

    recompute_tree_flows();

    flow_out = Matrix::Zero(n_, m_);
    cost_out = 0.0;
    for (Eigen::Index a = 0; a < num_arcs_; ++a) {
      if (!is_tree_[a] || flow_[a] <= 0.0) continue;
      const Eigen::Index i = a / m_;
      const Eigen::Index j = a % m_;
      flow_out(i, j) = flow_[a];
      cost_out += flow_[a] * cost_(i, j);
    }
    phi.resize(n_);
    psi.resize(m_);
    for (Eigen::Index i = 0; i < n_; ++i) phi(i) = -pi_[i];
    for (Eigen::Index j = 0; j < m_; ++j) psi(j) = pi_[n_ + j];
    pivots_out = static_cast<int>(pivots);
  }

 private:
  Eigen::Index src(Eigen::Index a) const { return a / m_; }
  Eigen::Index tgt(Eigen::Index a) const { return n_ + a % m_; }
  double arc_cost(Eigen::Index a) const { return cost_(a / m_, a % m_); }

  // Northwest-corner initial basis: a staircase of n + m - 1 arcs that
  // spans all nodes (degenerate zero entries included).
  void init_northwest() {
    flow_.assign(num_arcs_, 0.0);
    is_tree_.assign(num_arcs_, false);
    adj_.assign(num_nodes_, {});
    Vector a_rem = supply_;
    Vector b_rem = demand_;
    Eigen::Index i = 0, j = 0;
    while (true) {
      const Eigen::Index arc = i * m_ + j;
      const double x = std::min(a_rem(i), b_rem(j));
      flow_[arc] = std::max(0.0, x);
      add_tree_arc(arc);
      a_rem(i) -= x;
      b_rem(j) -= x;
      if (i == n_ - 1 && j == m_ - 1) break;
      if (j == m_ - 1) {
        ++i;
      } else if (i == n_ - 1) {
        ++j;
      } else if (a_rem(i) <= b_rem(j)) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void add_tree_arc(Eigen::Index a) {
    is_tree_[a] = true;
    adj_[src(a)].push_back(a);
    adj_[tgt(a)].push_back(a);
  }

  void remove_tree_arc(Eigen::Index a) {
    is_tree_[a] = false;
    auto drop = [a](std::vector<Eigen::Index>& v) {
      v.erase(std::find(v.begin(), v.end(), a));
    };
    drop(adj_[src(a)]);
    drop(adj_[tgt(a)]);
  }

  // Recomputes parent/pred/forward/depth and the potentials by a DFS
  // from node 0. Tree arcs have zero reduced cost.
  void rebuild_tree() {
    parent_.assign(num_nodes_, -1);
    pred_.assign(num_nodes_, -1);
    forward_.assign(num_nodes_, false);
    depth_.assign(num_nodes_, 0);
    pi_.assign(num_nodes_, 0.0);
    std::vector<Eigen::Index> stack = {0};
    std::vector<char> seen(num_nodes_, 0);
    seen[0] = 1;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index a : adj_[u]) {
        const Eigen::Index v = (src(a) == u) ? tgt(a) : src(a);
        if (seen[v]) continue;
        seen[v] = 1;
        parent_[v] = u;
        pred_[v] = a;
        forward_[v] = (src(a) == v);  // arc points v -> parent
        depth_[v] = depth_[u] + 1;
        // zero reduced cost: c + pi[src] - pi[tgt] = 0 on tree arcs
        pi_[v] = forward_[v] ? pi_[u] - arc_cost(a) : pi_[u] + arc_cost(a);
        stack.push_back(v);
      }
    }
  }

  Eigen::Index find_entering() {
    if (bland_mode_) {
      for (Eigen::Index a = 0; a < num_arcs_; ++a) {
        if (is_tree_[a]) continue;
        if (arc_cost(a) + pi_[src(a)] - pi_[tgt(a)] < -opt_tol_) return a;
      }
      return -1;
    }
    Eigen::Index best = -1;
    double best_rc = -opt_tol_;
    Eigen::Index countdown = block_size_;
    for (Eigen::Index k = 0; k < num_arcs_; ++k) {
      const Eigen::Index a = next_arc_;
      if (++next_arc_ == num_arcs_) next_arc_ = 0;
      if (!is_tree_[a]) {
        const double rc = arc_cost(a) + pi_[src(a)] - pi_[tgt(a)];
        if (rc < best_rc) {
          best_rc = rc;
          best = a;
        }
      }
      if (--countdown == 0) {
        if (best >= 0) return best;
        countdown = block_size_;
      }
    }
    return best;
  }

  // One pivot with entering arc e. Returns true when degenerate.
  bool pivot(Eigen::Index e) {
    const Eigen::Index u = src(e);
    const Eigen::Index v = tgt(e);
    // join node
    Eigen::Index ju = u, jv = v;
    while (depth_[ju] > depth_[jv]) ju = parent_[ju];
    while (depth_[jv] > depth_[ju]) jv = parent_[jv];
    while (ju != jv) {
      ju = parent_[ju];
      jv = parent_[jv];
    }
    const Eigen::Index join = ju;

    // leaving arc: first path (u..join, forward arcs lose flow, strict <),
    // then second path (v..join, backward arcs lose flow, <=)
    double delta = kInf;
    Eigen::Index out_node = -1;
    for (Eigen::Index w = u; w != join; w = parent_[w]) {
      if (forward_[w]) {
        const double d = flow_[pred_[w]];
        if (d < delta ||
            (bland_mode_ && d == delta && out_node >= 0 &&
             pred_[w] < pred_[out_node])) {
          delta = d;
          out_node = w;
        }
      }
    }
    for (Eigen::Index w = v; w != join; w = parent_[w]) {
      if (!forward_[w]) {
        const double d = flow_[pred_[w]];
        if (d <= delta) {
          if (d < delta || !bland_mode_ || out_node < 0 ||
              pred_[w] < pred_[out_node]) {
            delta = d;
            out_node = w;
          }
        }
      }
    }
    if (out_node < 0 || !(delta < kInf)) {
      throw SolverError("transport simplex: unbounded pivot", 0, 0.0);
    }

    if (delta > 0.0) {
      flow_[e] += delta;
      for (Eigen::Index w = v; w != join; w = parent_[w]) {
        flow_[pred_[w]] += forward_[w] ? delta : -delta;
      }
      for (Eigen::Index w = u; w != join; w = parent_[w]) {
        flow_[pred_[w]] += forward_[w] ? -delta : delta;
      }
    }
    const Eigen::Index leaving = pred_[out_node];
    flow_[leaving] = 0.0;
    remove_tree_arc(leaving);
    add_tree_arc(e);
    return delta == 0.0;
  }

  // The flows on a spanning tree are uniquely determined by the node
  // balances; leaf elimination rebuilds them directly from the supplies.
  void recompute_tree_flows() {
    std::vector<double> residual(num_nodes_);
    for (Eigen::Index i = 0; i < n_; ++i) residual[i] = supply_(i);
    for (Eigen::Index j = 0; j < m_; ++j) residual[n_ + j] = -demand_(j);
    std::vector<Eigen::Index> degree(num_nodes_);
    std::vector<size_t> cursor(num_nodes_, 0);
    std::vector<char> done_node(num_nodes_, 0);
    std::vector<char> done_arc_local(num_arcs_, 0);
    std::vector<Eigen::Index> queue;
    for (Eigen::Index w = 0; w < num_nodes_; ++w) {
      degree[w] = static_cast<Eigen::Index>(adj_[w].size());
      if (degree[w] == 1) queue.push_back(w);
    }
    Eigen::Index processed = 0;
    while (!queue.empty() && processed < num_nodes_ - 1) {
      const Eigen::Index w = queue.back();
      queue.pop_back();
      if (done_node[w]) continue;
      done_node[w] = 1;
      ++processed;
      Eigen::Index a = -1;
      while (cursor[w] < adj_[w].size()) {
        const Eigen::Index cand = adj_[w][cursor[w]];
        if (!done_arc_local[cand]) {
          a = cand;
          break;
        }
        ++cursor[w];
      }
      if (a < 0) continue;
      done_arc_local[a] = 1;
      const Eigen::Index p = (src(a) == w) ? tgt(a) : src(a);
      flow_[a] = (src(a) == w) ? residual[w] : -residual[w];
      if (flow_[a] < 0.0) flow_[a] = 0.0;
      residual[p] += residual[w];
      if (--degree[p] == 1 && !done_node[p]) queue.push_back(p);
    }
  }

  Eigen::Index n_, m_, num_nodes_, num_arcs_;
  const Matrix& cost_;
  Vector supply_, demand_;
  double opt_tol_;
  Eigen::Index block_size_;
  Eigen::Index next_arc_ = 0;
  bool bland_mode_ = false;

  std::vector<double> flow_;
  std::vector<char> is_tree_;
  std::vector<std::vector<Eigen::Index>> adj_;
  std::vector<Eigen::Index> parent_, pred_;
  std::vector<char> forward_;
  std::vector<Eigen::Index> depth_;
  std::vector<double> pi_;
};

struct StrippedPair {
  DiscreteMeasure mu, nu;
  std::vector<Eigen::Index> mu_idx, nu_idx;  // positions in the originals
};

StrippedPair strip_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  StrippedPair out;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) > 0.0) out.mu_idx.push_back(i);
  }
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    if (nu.weight(j) > 0.0) out.nu_idx.push_back(j);
  }
  auto take = [](const DiscreteMeasure& m,
                 const std::vector<Eigen::Index>& idx) {
    Matrix pts(static_cast<Eigen::Index>(idx.size()), m.dim());
    Vector w(static_cast<Eigen::Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) {
      pts.row(static_cast<Eigen::Index>(k)) = m.points().row(idx[k]);
      w(static_cast<Eigen::Index>(k)) = m.weight(idx[k]);
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
  };
  out.mu = take(mu, out.mu_idx);
  out.nu = take(nu, out.nu_idx);
  return out;
}

// Embeds a solution on the stripped supports back into the full index
// sets. Zero-weight atoms receive zero plan rows/columns and duals that
// keep the pair feasible.
TransportResult embed(const TransportResult& sub, const StrippedPair& sp,
                      const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const Matrix& full_cost) {
  TransportResult out;
  out.cost = sub.cost;
  out.iterations = sub.iterations;
  out.residual = sub.residual;
  out.coupling.matrix = Matrix::Zero(mu.size(), nu.size());
  out.duals.phi = Vector::Zero(mu.size());
  out.duals.psi = Vector::Zero(nu.size());
  for (size_t i = 0; i < sp.mu_idx.size(); ++i) {
    for (size_t j = 0; j < sp.nu_idx.size(); ++j) {
      out.coupling.matrix(sp.mu_idx[i], sp.nu_idx[j]) =
          sub.coupling.matrix(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j));
    }
    out.duals.phi(sp.mu_idx[i]) = sub.duals.phi(static_cast<Eigen::Index>(i));
  }
  for (size_t j = 0; j < sp.nu_idx.size(); ++j) {
    out.duals.psi(sp.nu_idx[j]) = sub.duals.psi(static_cast<Eigen::Index>(j));
  }
  // feasible fill-in for the stripped atoms
  std::vector<char> mu_live(mu.size(), 0), nu_live(nu.size(), 0);
  for (Eigen::Index i : sp.mu_idx) mu_live[i] = 1;
  for (Eigen::Index j : sp.nu_idx) nu_live[j] = 1;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu_live[i]) continue;
    double lo = kInf;
    for (Eigen::Index j : sp.nu_idx) {
      lo = std::min(lo, full_cost(i, j) - out.duals.psi(j));
    }
    out.duals.phi(i) = std::isfinite(lo) ? lo : 0.0;
  }
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    if (nu_live[j]) continue;
    double lo = kInf;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      lo = std::min(lo, full_cost(i, j) - out.duals.phi(i));
    }
    out.duals.psi(j) = std::isfinite(lo) ? lo : 0.0;
  }
  return out;
}

Vector log_sum_exp_rows(const Matrix& s) {
  Vector mx = s.rowwise().maxCoeff();
  Vector out(s.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (!std::isfinite(mx(i))) {
      out(i) = mx(i);
      continue;
    }
    out(i) = mx(i) + std::log((s.row(i).array() - mx(i)).exp().sum());
  }
  return out;
}

}  // namespace

Matrix pairwise_sq_dist(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) {
    throw std::invalid_argument("pairwise_sq_dist: dimension mismatch");
  }
  Matrix c(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    for (Eigen::Index j = 0; j < nu.size(); ++j) {
      c(i, j) = (mu.point(i) - nu.point(j)).squaredNorm();
    }
  }
  return c;
}

Matrix pairwise_pow_dist(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         double p) {
  if (mu.dim() != nu.dim()) {
    throw std::invalid_argument("pairwise_pow_dist: dimension mismatch");
  }
  Matrix c(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    for (Eigen::Index j = 0; j < nu.size(); ++j) {
      c(i, j) = std::pow((mu.point(i) - nu.point(j)).norm(), p);
    }
  }
  return c;
}

TransportResult solve_exact_lp(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu, const Matrix& cost) {
  if (cost.rows() != mu.size() || cost.cols() != nu.size()) {
    throw std::invalid_argument("solve_exact_lp: cost shape mismatch");
  }
  const double ma = mu.total_mass();
  const double mb = nu.total_mass();
  if (!(ma > 0.0) || !(mb > 0.0)) {
    throw std::invalid_argument("solve_exact_lp: empty support");
  }
  if (std::abs(ma - mb) > 1e-9 * std::max(ma, mb)) {
    throw std::invalid_argument("solve_exact_lp: unequal total masses");
  }

  const StrippedPair sp = strip_pair(mu, nu);
  Vector a = sp.mu.weights();
  Vector b = sp.nu.weights();
  // absorb the float imbalance into the largest demand
  Eigen::Index jmax;
  b.maxCoeff(&jmax);
  b(jmax) += a.sum() - b.sum();

  Matrix sub_cost(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      sub_cost(i, j) = cost(sp.mu_idx[i], sp.nu_idx[j]);
    }
  }

  TransportSimplex simplex(a, b, sub_cost);
  TransportResult sub;
  simplex.solve(sub.coupling.matrix, sub.duals.phi, sub.duals.psi, sub.cost,
                sub.iterations);
  return embed(sub, sp, mu, nu, cost);
}

TransportResult solve_w2_exact(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu) {
  return solve_exact_lp(mu, nu, pairwise_sq_dist(mu, nu));
}

TransportResult solve_w2_entropic(const DiscreteMeasure& mu,
                                  const DiscreteMeasure& nu, double epsilon,
                                  const SinkhornOptions& opts) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("solve_w2_entropic: epsilon must be > 0");
  }
  const double ma = mu.total_mass();
  const double mb = nu.total_mass();
  if (!(ma > 0.0) || !(mb > 0.0)) {
    throw std::invalid_argument("solve_w2_entropic: empty support");
  }
  if (std::abs(ma - mb) > 1e-9 * std::max(ma, mb)) {
    throw std::invalid_argument("solve_w2_entropic: unequal total masses");
  }

  const StrippedPair sp = strip_pair(mu, nu);
  const Matrix cost = pairwise_sq_dist(sp.mu, sp.nu);
  const Vector a = sp.mu.weights();
  Vector b = sp.nu.weights();
  b *= a.sum() / b.sum();

  const Vector log_a = a.array().log();
  const Vector log_b = b.array().log();
  Vector f = Vector::Zero(a.size());
  Vector g = Vector::Zero(b.size());

  // epsilon-scaling warm start, then polish at the target epsilon until
  // the marginal residual criterion is met
  std::vector<double> schedule;
  const double max_c = cost.size() > 0 ? cost.maxCoeff() : 1.0;
  for (double ek = std::max(1.0, max_c) * 0.5; ek > epsilon; ek *= 0.5) {
    schedule.push_back(ek);
  }
  schedule.push_back(epsilon);

  auto sweep = [&](double ek) {
    Matrix s = ((-cost).rowwise() + g.transpose()).rowwise() +
               (ek * log_b).transpose();
    f = -ek * log_sum_exp_rows(s / ek);
    Matrix st = ((-cost.transpose()).rowwise() + f.transpose()).rowwise() +
                (ek * log_a).transpose();
    g = -ek * log_sum_exp_rows(st / ek);
  };
  auto row_residual = [&](double ek) {
    // columns are exact right after the g-update; rows carry the error
    Matrix lp = (((-cost).colwise() + f).rowwise() + g.transpose()) / ek;
    Vector row =
        (lp.array().exp().matrix() * b.asDiagonal() * Vector::Ones(b.size()))
            .cwiseProduct(a);
    return (row - a).cwiseAbs().maxCoeff();
  };

  int it = 0;
  double residual = kInf;
  for (size_t stage = 0; stage < schedule.size(); ++stage) {
    const double ek = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    const int budget = last ? opts.max_iterations : 20;
    for (int k = 0; k < budget && it < opts.max_iterations; ++k, ++it) {
      sweep(ek);
      residual = row_residual(ek);
      if (residual <= opts.marginal_tol) break;
    }
    if (last) break;
  }
  if (residual > opts.marginal_tol) {
    throw SolverError("sinkhorn: no convergence after " + std::to_string(it) +
                          " iterations, residual " + std::to_string(residual),
                      it, residual);
  }

  // plan, then round to the transport polytope
  Matrix plan = ((((-cost).colwise() + f).rowwise() + g.transpose()) / epsilon)
                    .array()
                    .exp();
  plan = a.asDiagonal() * plan * b.asDiagonal();
  Vector row = plan.rowwise().sum();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double s = row(i) > 0 ? std::min(1.0, a(i) / row(i)) : 1.0;
    plan.row(i) *= s;
  }
  Vector col = plan.colwise().sum();
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double s = col(j) > 0 ? std::min(1.0, b(j) / col(j)) : 1.0;
    plan.col(j) *= s;
  }
  Vector err_r = a - plan.rowwise().sum();
  Vector err_c = b - plan.colwise().sum().transpose();
  const double er = err_r.sum();
  if (er > 0.0) plan += (err_r * err_c.transpose()) / er;

  TransportResult sub;
  sub.coupling.matrix = plan;
  sub.cost = (plan.array() * cost.array()).sum();
  sub.iterations = it + 1;
  sub.residual = residual;
  // feasible potentials via c-transform of g
  sub.duals.phi = (cost.rowwise() - g.transpose()).rowwise().minCoeff();
  sub.duals.psi =
      (cost.colwise() - sub.duals.phi).colwise().minCoeff().transpose();
  return embed(sub, sp, mu, nu, pairwise_sq_dist(mu, nu));
}

double coupling_cost(
    const Coupling& pi, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
    const std::function<double(const Eigen::RowVectorXd&,
                               const Eigen::RowVectorXd&)>& cost_fn) {
  if (pi.matrix.rows() != mu.size() || pi.matrix.cols() != nu.size()) {
    throw std::invalid_argument("coupling_cost: shape mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < pi.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < pi.matrix.cols(); ++j) {
      if (pi.matrix(i, j) != 0.0) {
        total += pi.matrix(i, j) * cost_fn(mu.point(i), nu.point(j));
      }
    }
  }
  return total;
}

}  // namespace wop
