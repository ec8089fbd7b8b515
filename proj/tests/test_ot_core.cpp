#include "wop/ot_core.hpp"

#include <random>

#include "doctest.h"
#include "test_support.hpp"

using namespace wop;
using test::dirac1;
using test::vec1;

namespace {

DiscreteMeasure uniform_1d(std::initializer_list<double> xs) {
  Matrix pts(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) pts(i++, 0) = x;
  Vector w = Vector::Constant(pts.rows(), 1.0 / double(pts.rows()));
  return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace

TEST_CASE("exact solver on pinned instances") {
  // (delta_0, delta_1) -> cost 1, pi = [[1]]
  const TransportResult r = solve_w2_exact(dirac1(0.0, 1.0), dirac1(1.0, 1.0));
  CHECK(r.cost == doctest::Approx(1.0));
  CHECK(r.coupling.matrix(0, 0) == doctest::Approx(1.0));

  // identity case
  test::Rng rng(3);
  const DiscreteMeasure mu = test::random_probability(rng, 15, 2);
  CHECK(solve_w2_exact(mu, mu).cost == doctest::Approx(0.0).epsilon(1e-12));

  // monotone pairing beats the swap: cost 2.125
  const DiscreteMeasure a = uniform_1d({0.0, 1.0});
  const DiscreteMeasure b = uniform_1d({0.5, 3.0});
  CHECK(solve_w2_exact(a, b).cost == doctest::Approx(2.125).epsilon(1e-12));
}

TEST_CASE("exact solver errors") {
  CHECK_THROWS_AS(solve_w2_exact(DiscreteMeasure::null_measure(1),
                                 dirac1(0.0, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_w2_exact(dirac1(0.0, 2.0), dirac1(1.0, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("exact solver equals permutation enumeration") {
  test::Rng rng(11);
  for (int rep = 0; rep < 40; ++rep) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 5);  // <= 6
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 3);
    Matrix pa(n, d), pb(n, d);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        pa(i, k) = coord(rng);
        pb(i, k) = coord(rng);
      }
    }
    const Vector w = Vector::Constant(n, 1.0 / double(n));
    const DiscreteMeasure mu(pa, w), nu(pb, w);
    const double brute = test::brute_force_w2_sq_uniform(mu, nu);
    const TransportResult r = solve_w2_exact(mu, nu);
    CHECK(r.cost == doctest::Approx(brute).epsilon(1e-10));
  }
}

TEST_CASE("exact solver equals 1-d CDF transport with general weights") {
  test::Rng rng(13);
  for (int rep = 0; rep < 30; ++rep) {
    const DiscreteMeasure mu =
        test::random_probability(rng, 2 + rng() % 40, 1);
    const DiscreteMeasure nu =
        test::random_probability(rng, 2 + rng() % 40, 1);
    const double oracle = test::w1d_pow_exact(mu, nu, 2.0);
    CHECK(solve_w2_exact(mu, nu).cost ==
          doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("optimality certificate on random instances") {
  test::Rng rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    const Eigen::Index n = 2 + rng() % 30;
    const Eigen::Index m = 2 + rng() % 30;
    const Eigen::Index d = 1 + rng() % 3;
    DiscreteMeasure mu = test::random_measure(rng, n, d, 2.0, 2.0);
    DiscreteMeasure nu = test::random_measure(rng, m, d, 2.0, 2.0);
    const Matrix cost = pairwise_sq_dist(mu, nu);
    const TransportResult r = solve_exact_lp(mu, nu, cost);
    const auto cert = test::check_transport_certificate(mu, nu, cost, r);
    CHECK(cert.max_row_err <= 1e-12 * (1.0 + mu.weights().maxCoeff()));
    CHECK(cert.max_col_err <= 1e-12 * (1.0 + nu.weights().maxCoeff()));
    CHECK(cert.min_entry >= 0.0);
    CHECK(cert.max_dual_violation <= 1e-9);
    CHECK(cert.duality_gap <= 1e-8 * (1.0 + r.cost));
  }
}

TEST_CASE("exact solver symmetry") {
  test::Rng rng(19);
  for (int rep = 0; rep < 10; ++rep) {
    const DiscreteMeasure mu = test::random_probability(rng, 12, 2);
    const DiscreteMeasure nu = test::random_probability(rng, 9, 2);
    const double ab = solve_w2_exact(mu, nu).cost;
    const double ba = solve_w2_exact(nu, mu).cost;
    CHECK(std::abs(ab - ba) <= 1e-12 * (1.0 + ab));
  }
}

TEST_CASE("zero-weight atoms get zero rows and feasible duals") {
  Matrix pts(3, 1);
  pts << 0.0, 5.0, 1.0;
  Vector w(3);
  w << 0.5, 0.0, 0.5;
  const DiscreteMeasure mu(pts, w);
  const DiscreteMeasure nu = uniform_1d({0.25, 0.75});
  const Matrix cost = pairwise_sq_dist(mu, nu);
  const TransportResult r = solve_exact_lp(mu, nu, cost);
  CHECK(r.coupling.matrix.row(1).cwiseAbs().maxCoeff() == 0.0);
  const auto cert = test::check_transport_certificate(mu, nu, cost, r);
  CHECK(cert.max_dual_violation <= 1e-9);
  CHECK(cert.duality_gap <= 1e-8);
}

TEST_CASE("sinkhorn basics") {
  // single coupling: cost 1 at any eps
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const TransportResult r =
        solve_w2_entropic(dirac1(0.0, 1.0), dirac1(1.0, 1.0), eps);
    CHECK(r.cost == doctest::Approx(1.0).epsilon(1e-9));
  }
  // identical measures, small eps -> cost ~ 0
  test::Rng rng(23);
  const DiscreteMeasure mu = test::random_probability(rng, 10, 2);
  CHECK(solve_w2_entropic(mu, mu, 1e-3).cost ==
        doctest::Approx(0.0).epsilon(1e-6));

  // against the exact value on the pinned instance
  const DiscreteMeasure a = uniform_1d({0.0, 1.0});
  const DiscreteMeasure b = uniform_1d({0.5, 3.0});
  const TransportResult r = solve_w2_entropic(a, b, 1e-3);
  CHECK(std::abs(r.cost - 2.125) <= 1e-2);
}

TEST_CASE("sinkhorn marginals, duals, and monotonicity in eps") {
  test::Rng rng(29);
  const DiscreteMeasure mu = test::random_probability(rng, 14, 2);
  const DiscreteMeasure nu = test::random_probability(rng, 11, 2);
  const Matrix cost = pairwise_sq_dist(mu, nu);
  const double exact = solve_w2_exact(mu, nu).cost;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.5, 0.1, 0.02, 0.004}) {
    const TransportResult r = solve_w2_entropic(mu, nu, eps);
    const auto cert = test::check_transport_certificate(mu, nu, cost, r);
    CHECK(cert.max_row_err <= 1e-9);
    CHECK(cert.max_col_err <= 1e-9);
    CHECK(cert.max_dual_violation <= 1e-9);
    // rounded plan is feasible, so its cost dominates the optimum
    CHECK(r.cost >= exact - 1e-9);
    // weak duality for the c-transformed potentials
    const double dual = r.duals.phi.dot(mu.weights()) +
                        r.duals.psi.dot(nu.weights());
    CHECK(dual <= exact + 1e-9);
    CHECK(r.cost <= prev + 1e-9);
    prev = r.cost;
  }
}

TEST_CASE("coupling_cost") {
  const DiscreteMeasure a = dirac1(0.0, 1.0);
  const DiscreteMeasure b = dirac1(1.0, 1.0);
  Coupling pi;
  pi.matrix = Matrix::Constant(1, 1, 1.0);
  auto sq = [](const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
    return (x - y).squaredNorm();
  };
  CHECK(coupling_cost(pi, a, b, sq) == doctest::Approx(1.0));
  auto zero = [](const Eigen::RowVectorXd&, const Eigen::RowVectorXd&) {
    return 0.0;
  };
  CHECK(coupling_cost(pi, a, b, zero) == 0.0);
}

TEST_CASE("sinkhorn reports non-convergence with iterations and residual") {
  const DiscreteMeasure a = uniform_1d({0.0, 1.0});
  const DiscreteMeasure b = uniform_1d({0.5, 3.0});
  SinkhornOptions opts;
  opts.max_iterations = 2;
  try {
    solve_w2_entropic(a, b, 1e-3, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.iterations == 2);
    CHECK(e.residual > 0.0);
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("exact solver handles single-atom sides") {
  Matrix pa(1, 1);
  pa << 0.5;
  Vector wa(1);
  wa << 2.0;
  Matrix pb(5, 1);
  pb << 0, 1, 2, 3, 4;
  const Vector wb = Vector::Constant(5, 0.4);
  const TransportResult r =
      solve_w2_exact(DiscreteMeasure(pa, wa), DiscreteMeasure(pb, wb));
  CHECK(r.cost == doctest::Approx(8.5).epsilon(1e-14));
  CHECK(r.coupling.matrix.row(0).sum() == doctest::Approx(2.0));
}

TEST_CASE("exact solver on tie-heavy integer grids keeps certificates") {
  test::Rng rng(71);
  for (int rep = 0; rep < 8; ++rep) {
    const Eigen::Index n = 20 + rng() % 30;
    const Eigen::Index m = 20 + rng() % 30;
    Matrix pa(n, 2), pb(m, 2);
    Vector wa(n), wb(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      pa(i, 0) = double(rng() % 4);
      pa(i, 1) = double(rng() % 4);
      wa(i) = 1.0 + double(rng() % 3);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      pb(j, 0) = double(rng() % 4);
      pb(j, 1) = double(rng() % 4);
      wb(j) = 1.0 + double(rng() % 3);
    }
    wb *= wa.sum() / wb.sum();
    const DiscreteMeasure mu(pa, wa), nu(pb, wb);
    const Matrix cost = pairwise_sq_dist(mu, nu);
    const auto cert = test::check_transport_certificate(
        mu, nu, cost, solve_exact_lp(mu, nu, cost));
    CHECK(cert.max_dual_violation <= 1e-9);
    CHECK(cert.duality_gap <= 1e-8 * (1.0 + 100.0));
    CHECK(cert.max_row_err <= 1e-12 * (1.0 + wa.maxCoeff()));
    CHECK(cert.max_col_err <= 1e-12 * (1.0 + wb.maxCoeff()));
  }
}
