#pragma once

// Replica-symmetric solution for the disorder-averaged equilibrium.
//
// The order parameters (Phi, q0, q_hat0, w) solve
//   w      = alpha / (1 + Phi)
//   q_hat0 = alpha (s^2 + q0) / (1 + Phi)^2
//   q0     = <Delta*^2>        = (q_hat0 / w^2) psi_q(tau)
//   Phi    = <t Delta*> / sqrt(q_hat0) = psi_phi(tau) / w
//   R_bar  = z0 + <|Delta*|>    = z0 + (sqrt(q_hat0) / w) psi_r(tau)
// with tau = eps / sqrt(q_hat0). Delta* is the soft-thresholded response to a
// standard normal field t, and the psi functions are twice its upper-tail moments.

#include <span>
#include <string>
#include <vector>

namespace infoeff {

/// sqrt(2/pi) exp(-tau^2/2) - tau erfc(tau/sqrt2)
[[nodiscard]] double psi_r(double tau);
/// (1 + tau^2) erfc(tau/sqrt2) - sqrt(2/pi) tau exp(-tau^2/2)
[[nodiscard]] double psi_q(double tau);
/// erfc(tau/sqrt2)
[[nodiscard]] double psi_phi(double tau);

/// Positive root Phi_+ of the susceptibility quadratic, in a form that stays regular
/// when psi_q/psi_phi -> 1. Throws DomainError when tau and eps are zero or of
/// opposite sign, or when the quadratic has no real root.
[[nodiscard]] double phi_plus(double tau, double eps, double s);

enum class ReplicaStatus {
    ok,
    transition, // alpha == psi_phi(tau): Phi diverges
    rejected,   // outside the branch's domain (denominator <= 0 or no real root)
};

struct ReplicaSolution {
    double tau = 0.0;
    double alpha = 0.0;
    double eps = 0.0;
    double phi = 0.0;
    double q0 = 0.0;
    double q_hat0 = 0.0;
    double w = 0.0;
    double z0_percap = 0.0;
    double h_mean = 0.0;
    bool clamped = false;
    ReplicaStatus status = ReplicaStatus::ok;
    std::string note;
};

/// Fixed eps, alpha as output. Every grid point must share the sign of eps and be nonzero.
[[nodiscard]] ReplicaSolution solve_fixed_eps_point(double eps, double s, double r_bar, double tau);
[[nodiscard]] std::vector<ReplicaSolution> solve_fixed_eps(double eps, double s, double r_bar,
                                                           std::span<const double> tau_grid);

/// Fixed alpha, eps as output. Points outside the domain come back with a non-ok status.
[[nodiscard]] ReplicaSolution solve_fixed_alpha_point(double alpha, double s, double r_bar, double tau);
[[nodiscard]] std::vector<ReplicaSolution> solve_fixed_alpha(double alpha, double s, double r_bar,
                                                             std::span<const double> tau_grid);

struct SaddleResiduals {
    double w = 0.0;
    double qh = 0.0;
    double q = 0.0;
    double chi = 0.0;
    double r = 0.0; // eq. for R_bar; meaningful only when the point is not clamped

    [[nodiscard]] double max_core() const;
};

/// Relative residuals |lhs - rhs| / max(1, |lhs|, |rhs|) of the saddle-point equations.
[[nodiscard]] SaddleResiduals saddle_residuals(const ReplicaSolution& sol, double s, double r_bar);

/// tau > 0 on the fixed-eps branch (eps > 0) whose alpha equals `alpha`; the branch
/// sweeps alpha from +inf (tau -> 0) down to 0 (tau -> inf).
[[nodiscard]] double tau_for_alpha(double alpha, double eps, double s);

/// tau on the fixed-alpha branch whose eps equals `eps` (eps > 0 only); throws DomainError
/// when no such point exists.
[[nodiscard]] double tau_for_eps(double eps, double alpha, double s);

/// Limit of the fixed-eps branch at eps -> 0: alpha_c = psi_phi(0) = 1.
inline constexpr double kCriticalAlphaZeroCost = 1.0;

} // namespace infoeff
