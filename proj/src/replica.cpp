#include "infoeff/replica.hpp"

#include "infoeff/errors.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace infoeff {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588; // sqrt(2/pi)

double gauss_kernel(double tau) { return kSqrt2OverPi * std::exp(-0.5 * tau * tau); }

double erfc_scaled(double tau) { return std::erfc(tau / std::numbers::sqrt2); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Fills the observables shared by both branches once (tau, alpha, eps, phi, q_hat0) are known.
void complete(ReplicaSolution& sol, double s, double r_bar)
{
    sol.w = sol.alpha / (1.0 + sol.phi);
    sol.q0 = sol.q_hat0 / (sol.w * sol.w) * psi_q(sol.tau);
    const double mean_abs_delta = std::sqrt(sol.q_hat0) / sol.w * psi_r(sol.tau);
    sol.z0_percap = r_bar - mean_abs_delta;
    sol.clamped = sol.z0_percap < 0.0;
    if (sol.clamped) sol.z0_percap = 0.0;
    sol.h_mean = (sol.q0 + s * s) / ((1.0 + sol.phi) * (1.0 + sol.phi));
}

ReplicaSolution rejected(double tau, std::string why)
{
    ReplicaSolution sol;
    sol.tau = tau;
    sol.status = ReplicaStatus::rejected;
    sol.note = std::move(why);
    return sol;
}

template <typename F>
double bracket_root(F&& f, double lo, double hi)
{
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, max_iter);
    return 0.5 * (a + b);
}

double relative_gap(double lhs, double rhs)
{
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

} // namespace

double psi_r(double tau) { return gauss_kernel(tau) - tau * erfc_scaled(tau); }

double psi_q(double tau) { return (1.0 + tau * tau) * erfc_scaled(tau) - tau * gauss_kernel(tau); }

double psi_phi(double tau) { return erfc_scaled(tau); }

double phi_plus(double tau, double eps, double s)
{
    if (tau == 0.0 || eps == 0.0) throw DomainError("phi_plus: tau and eps must be nonzero");
    if (sign(tau) != sign(eps)) throw DomainError("phi_plus: tau and eps must share a sign");
    const double pphi = psi_phi(tau);
    const double one_minus_r = 1.0 - psi_q(tau) / pphi;
    const double inv_c = (tau * tau) / (eps * eps); // tau^2 / eps^2 = 1 / q_hat0
    const double disc = 1.0 + 4.0 * pphi * s * s * inv_c * one_minus_r;
    if (disc < 0.0) throw DomainError("phi_plus: no real root for this (tau, eps)");
    return 2.0 * s * s * pphi * inv_c / (1.0 + std::sqrt(disc));
}

ReplicaSolution solve_fixed_eps_point(double eps, double s, double r_bar, double tau)
{
    ReplicaSolution sol;
    sol.tau = tau;
    sol.eps = eps;
    sol.phi = phi_plus(tau, eps, s);
    sol.q_hat0 = eps * eps / (tau * tau);
    sol.alpha = (1.0 + sol.phi) / sol.phi * psi_phi(tau);
    complete(sol, s, r_bar);
    return sol;
}

std::vector<ReplicaSolution> solve_fixed_eps(double eps, double s, double r_bar, std::span<const double> tau_grid)
{
    require(eps != 0.0, "solve_fixed_eps: eps must be nonzero");
    std::vector<ReplicaSolution> curve;
    curve.reserve(tau_grid.size());
    for (double tau : tau_grid) {
        require(tau != 0.0 && sign(tau) == sign(eps), "solve_fixed_eps: tau grid must be nonzero and share eps's sign");
        try {
            curve.push_back(solve_fixed_eps_point(eps, s, r_bar, tau));
        } catch (const DomainError& e) {
            curve.push_back(rejected(tau, e.what()));
        }
    }
    return curve;
}

ReplicaSolution solve_fixed_alpha_point(double alpha, double s, double r_bar, double tau)
{
    require(alpha > 0.0, "solve_fixed_alpha: alpha must be > 0");
    if (tau == 0.0) return rejected(tau, "tau = 0 is singular");
    const double pphi = psi_phi(tau);
    if (alpha == pphi) {
        ReplicaSolution sol = rejected(tau, "alpha = psi_phi(tau): susceptibility diverges");
        sol.alpha = alpha;
        sol.status = ReplicaStatus::transition;
        return sol;
    }
    if (alpha < pphi) return rejected(tau, "alpha < psi_phi(tau): negative susceptibility");
    const double denom = 1.0 - psi_q(tau) / alpha;
    if (denom <= 0.0) return rejected(tau, "alpha <= psi_q(tau)");

    ReplicaSolution sol;
    sol.tau = tau;
    sol.alpha = alpha;
    sol.phi = pphi / (alpha - pphi);
    const double one_plus_phi = 1.0 + sol.phi;
    sol.q_hat0 = alpha * s * s / (one_plus_phi * one_plus_phi) / denom;
    sol.eps = sign(tau) * std::abs(tau) * std::sqrt(sol.q_hat0);
    complete(sol, s, r_bar);
    return sol;
}

std::vector<ReplicaSolution> solve_fixed_alpha(double alpha, double s, double r_bar, std::span<const double> tau_grid)
{
    std::vector<ReplicaSolution> curve;
    curve.reserve(tau_grid.size());
    for (double tau : tau_grid) curve.push_back(solve_fixed_alpha_point(alpha, s, r_bar, tau));
    return curve;
}

double SaddleResiduals::max_core() const { return std::max({w, qh, q, chi}); }

SaddleResiduals saddle_residuals(const ReplicaSolution& sol, double s, double r_bar)
{
    const double sqrt_qh = std::sqrt(sol.q_hat0);
    SaddleResiduals res;
    res.w = relative_gap(sol.w, sol.alpha / (1.0 + sol.phi));
    res.qh = relative_gap(sol.q_hat0, sol.alpha * (s * s + sol.q0) / ((1.0 + sol.phi) * (1.0 + sol.phi)));
    res.q = relative_gap(sol.q0, sol.q_hat0 / (sol.w * sol.w) * psi_q(sol.tau));
    res.chi = relative_gap(sol.phi, psi_phi(sol.tau) / sol.w);
    res.r = relative_gap(r_bar, sol.z0_percap + sqrt_qh / sol.w * psi_r(sol.tau));
    return res;
}

double tau_for_alpha(double alpha, double eps, double s)
{
    require(alpha > 0.0, "tau_for_alpha: alpha must be > 0");
    require(eps > 0.0, "tau_for_alpha: eps must be > 0");
    auto gap = [&](double tau) { return (1.0 + 1.0 / phi_plus(tau, eps, s)) * psi_phi(tau) - alpha; };

    // alpha(tau) falls from +inf at tau -> 0; walk a geometric grid to the first sign change.
    double lo = 1e-6;
    double f_lo = gap(lo);
    if (f_lo < 0.0) throw DomainError("tau_for_alpha: alpha above the branch range");
    for (double hi = lo * 1.25; hi < 40.0; hi *= 1.25) {
        const double f_hi = gap(hi);
        if (f_hi <= 0.0) return bracket_root(gap, lo, hi);
        lo = hi;
        f_lo = f_hi;
    }
    throw DomainError("tau_for_alpha: alpha below the branch range");
}

double tau_for_eps(double eps, double alpha, double s)
{
    require(alpha > 0.0, "tau_for_eps: alpha must be > 0");
    if (!(eps > 0.0)) throw DomainError("tau_for_eps: only eps > 0 is bracketed");
    // Valid tau > 0 need alpha > psi_phi(tau), i.e. tau above the pole.
    double lo = alpha >= 1.0 ? 0.0 : std::numbers::sqrt2 * boost::math::erfc_inv(alpha);
    auto gap = [&](double tau) {
        const auto sol = solve_fixed_alpha_point(alpha, s, 1.0, tau);
        if (sol.status != ReplicaStatus::ok) return -eps;
        return sol.eps - eps;
    };
    lo = std::max(lo, 0.0) + 1e-9;
    for (double hi = lo + 1e-3; hi < 1e3; hi = lo + 2.0 * (hi - lo)) {
        if (gap(hi) >= 0.0) return bracket_root(gap, lo, hi);
    }
    throw DomainError("tau_for_eps: eps out of range");
}

} // namespace infoeff
