#pragma once

#include "wop/measures.hpp"
#include "wop/ot_core.hpp"

namespace wop {

/// Result of a WOP evaluation.
///
///   distance^2 = mass_term + transport_term,
///   mass_term  = (m_mu - m_nu)^2,
///
/// and coupling is the optimal plan between the normalized measures
/// (which is also optimal for the mass-dilated pair).
struct WopResult {
  double distance = 0.0;
  double mass_term = 0.0;
  double transport_term = 0.0;
  Coupling coupling;
};

/// WOP^2 = (m_mu - m_nu)^2 + W2^2(T_{m_mu}#mu_bar, T_{m_nu}#nu_bar),
/// where T_a(x) = a (x - x0) + x0 and the bar denotes normalization
/// (delta_{x0} for the null measure). Symmetric bit-for-bit in its
/// arguments.
WopResult wop_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const Vector& x0);

/// Same value through the moment decomposition
///   WOP^2 = (m_mu-m_nu)^2 + (m_mu-m_nu)(M_x0(mu)-M_x0(nu))
///           + m_mu m_nu W2^2(mu_bar, nu_bar).
WopResult wop_distance_defbis(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const Vector& x0);

/// Two-point ground cost of the flat formulation:
///   a(a-b)|x-x0|^2 + b(b-a)|y-x0|^2 + ab|x-y|^2
/// which equals |a(x-x0) - b(y-x0)|^2. Requires a, b >= 0.
double wop_cost(double a, double b, const Vector& x0, const Vector& x,
                const Vector& y);

/// Correction Delta with WOP^2_{x0} = WOP^2_{y0} + Delta:
///   Delta = (m_mu-m_nu)[M_x0(mu)-M_y0(mu)+M_y0(nu)-M_x0(nu)].
double reference_shift(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const Vector& x0, const Vector& y0);

/// Optimal potentials for the WOP dual problem, one value per support
/// atom of mu (phi_tilde) and nu (psi_tilde). Feasibility:
///   m_mu phi_tilde(x_i) + m_nu psi_tilde(y_j)
///     <= (m_mu-m_nu)^2 + |T_{m_mu}(x_i) - T_{m_nu}(y_j)|^2,
/// and value = int phi_tilde dmu + int psi_tilde dnu = WOP^2.
struct DualCertificate {
  Vector phi_tilde;
  Vector psi_tilde;
  double value = 0.0;
};

/// Requires both masses positive (the dual statement degenerates on the
/// null measure).
DualCertificate dual_certificate(const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu, const Vector& x0);

/// WOP_p^p = |m_mu - m_nu|^p + W_p^p(T_{m_mu}#mu_bar, T_{m_nu}#nu_bar),
/// exact LP with ground cost |x-y|^p. Requires p >= 1.
double wop_p_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const Vector& x0, double p);

}  // namespace wop
