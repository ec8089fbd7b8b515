#include "wop/wop_metric.hpp"

#include <cmath>
#include <stdexcept>

namespace wop {

namespace {

void check_dims(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                const Vector& x0) {
  const Eigen::Index d = x0.size();
  if ((mu.size() > 0 && mu.dim() != d) || (nu.size() > 0 && nu.dim() != d)) {
    throw std::invalid_argument("wop: dimension mismatch");
  }
}

// Orders the pair canonically so evaluation is symmetric bit-for-bit.
bool canonical_order(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.total_mass() != b.total_mass()) {
    return a.total_mass() < b.total_mass();
  }
  if (a.size() != b.size()) return a.size() < b.size();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index k = 0; k < a.dim(); ++k) {
      if (a.points()(i, k) != b.points()(i, k)) {
        return a.points()(i, k) < b.points()(i, k);
      }
    }
    if (a.weight(i) != b.weight(i)) return a.weight(i) < b.weight(i);
  }
  return true;
}

struct NormalizedSolve {
  DiscreteMeasure mu_bar, nu_bar;
  double m_mu = 0.0, m_nu = 0.0;
  double w2_sq = 0.0;  // between the normalized measures
  TransportResult transport;
};

// One exact W2 solve between the normalized measures; shared by both
// static formulations and by the dual certificate. The optimal coupling
// for |x-y|^2 between the normalized measures is also optimal between
// the mass-dilated ones, because the extra terms of the flat cost do not
// depend on the coupling.
NormalizedSolve solve_normalized(const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu, const Vector& x0) {
  NormalizedSolve s;
  s.m_mu = mu.total_mass();
  s.m_nu = nu.total_mass();
  s.mu_bar = normalize(mu, x0);
  s.nu_bar = normalize(nu, x0);
  s.transport = solve_w2_exact(s.mu_bar, s.nu_bar);
  s.w2_sq = s.transport.cost;
  return s;
}

WopResult assemble(double mass_term, double transport_term,
                   Coupling coupling) {
  WopResult r;
  r.mass_term = mass_term;
  r.transport_term = transport_term;
  r.distance = std::sqrt(std::max(0.0, mass_term + transport_term));
  r.coupling = std::move(coupling);
  return r;
}

WopResult wop_distance_ordered(const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu, const Vector& x0) {
  NormalizedSolve s = solve_normalized(mu, nu, x0);
  const DiscreteMeasure lift_mu = pushforward_dilation(s.mu_bar, s.m_mu, x0);
  const DiscreteMeasure lift_nu = pushforward_dilation(s.nu_bar, s.m_nu, x0);
  double transport_term = 0.0;
  const Matrix& pi = s.transport.coupling.matrix;
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    for (Eigen::Index j = 0; j < pi.cols(); ++j) {
      if (pi(i, j) != 0.0) {
        transport_term +=
            pi(i, j) * (lift_mu.point(i) - lift_nu.point(j)).squaredNorm();
      }
    }
  }
  const double dm = s.m_mu - s.m_nu;
  return assemble(dm * dm, transport_term, std::move(s.transport.coupling));
}

WopResult wop_defbis_ordered(const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, const Vector& x0) {
  NormalizedSolve s = solve_normalized(mu, nu, x0);
  const double dm = s.m_mu - s.m_nu;
  const double transport_term = dm * (moment2(mu, x0) - moment2(nu, x0)) +
                                s.m_mu * s.m_nu * s.w2_sq;
  return assemble(dm * dm, transport_term, std::move(s.transport.coupling));
}

WopResult transpose_result(WopResult r) {
  r.coupling.matrix.transposeInPlace();
  return r;
}

}  // namespace

WopResult wop_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const Vector& x0) {
  check_dims(mu, nu, x0);
  if (canonical_order(mu, nu)) return wop_distance_ordered(mu, nu, x0);
  return transpose_result(wop_distance_ordered(nu, mu, x0));
}

WopResult wop_distance_defbis(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const Vector& x0) {
  check_dims(mu, nu, x0);
  if (canonical_order(mu, nu)) return wop_defbis_ordered(mu, nu, x0);
  return transpose_result(wop_defbis_ordered(nu, mu, x0));
}

double wop_cost(double a, double b, const Vector& x0, const Vector& x,
                const Vector& y) {
  if (!(a >= 0.0) || !(b >= 0.0)) {
    throw std::invalid_argument("wop_cost: masses must be >= 0");
  }
  return a * (a - b) * (x - x0).squaredNorm() +
         b * (b - a) * (y - x0).squaredNorm() + a * b * (x - y).squaredNorm();
}

double reference_shift(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const Vector& x0, const Vector& y0) {
  check_dims(mu, nu, x0);
  check_dims(mu, nu, y0);
  return (mu.total_mass() - nu.total_mass()) *
         (moment2(mu, x0) - moment2(mu, y0) + moment2(nu, y0) -
          moment2(nu, x0));
}

DualCertificate dual_certificate(const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu, const Vector& x0) {
  check_dims(mu, nu, x0);
  const double a = mu.total_mass();
  const double b = nu.total_mass();
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument(
        "dual_certificate: undefined for the null measure");
  }
  // Lift the normalized potentials through the flat cost identity:
  //   |T_a x - T_b y|^2 = ab|x-y|^2 + a(a-b)|x-x0|^2 + b(b-a)|y-x0|^2,
  // then divide by the masses as in the dual theorem.
  NormalizedSolve s = solve_normalized(mu, nu, x0);
  DualCertificate cert;
  cert.phi_tilde.resize(mu.size());
  cert.psi_tilde.resize(nu.size());
  const double dm = a - b;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double r2 = (mu.point(i) - x0.transpose()).squaredNorm();
    cert.phi_tilde(i) = b * s.transport.duals.phi(i) + dm * r2 + dm * dm / a;
  }
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    const double r2 = (nu.point(j) - x0.transpose()).squaredNorm();
    cert.psi_tilde(j) = a * s.transport.duals.psi(j) - dm * r2;
  }
  cert.value = cert.phi_tilde.dot(mu.weights()) +
               cert.psi_tilde.dot(nu.weights());
  return cert;
}

double wop_p_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const Vector& x0, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("wop_p_distance: p must be >= 1");
  check_dims(mu, nu, x0);
  const DiscreteMeasure* lo = &mu;
  const DiscreteMeasure* hi = &nu;
  if (!canonical_order(mu, nu)) std::swap(lo, hi);
  const double ma = lo->total_mass();
  const double mb = hi->total_mass();
  const DiscreteMeasure lift_a =
      pushforward_dilation(normalize(*lo, x0), ma, x0);
  const DiscreteMeasure lift_b =
      pushforward_dilation(normalize(*hi, x0), mb, x0);
  const TransportResult t =
      solve_exact_lp(lift_a, lift_b, pairwise_pow_dist(lift_a, lift_b, p));
  return std::pow(std::pow(std::abs(ma - mb), p) + t.cost, 1.0 / p);
}

}  // namespace wop
