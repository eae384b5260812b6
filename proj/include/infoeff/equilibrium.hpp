#pragma once

// Competitive equilibrium as the minimizer of H_eps over nonnegative allocations,
// certified through the Kuhn-Tucker conditions.

#include "infoeff/learning.hpp"
#include "infoeff/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace infoeff {

enum class SolverMethod { coordinate_descent, projected_gradient };

struct SolverOptions {
    SolverMethod method = SolverMethod::coordinate_descent;
    /// Force z0+ = z0-.
    bool tie_chartist = true;
    /// When false the chartist is absent (z0 pinned to 0).
    bool chartist = true;
    /// When false every informed component is pinned to 0.
    bool informed = true;
    /// Sweeps (coordinate descent) or gradient steps (projected gradient).
    std::uint64_t max_iter = 1'000'000;
    double kt_tol = 1e-8;
    /// Projected-gradient step; 0 picks 1/L from a power-iteration estimate of the curvature.
    double step = 0.0;
    /// Nesterov momentum with adaptive restart for projected gradient.
    bool accelerate = true;
    /// Random starting point drawn from this seed; zero start when empty.
    std::optional<std::uint64_t> init_seed;
    /// Keep the objective after every sweep in EquilibriumResult::trace.
    bool trace = false;

    void validate() const;
};

struct EquilibriumResult {
    Allocation alloc;
    double objective = 0.0;
    double kt_residual = 0.0;
    std::uint64_t iterations = 0;
    double distance = 0.0;
    bool converged = false;
    /// Mean over states and k0 of the clearing price, for comparison against R_bar.
    double mean_price = 0.0;
    std::vector<double> trace;
};

/// Which components are free variables in the KT check.
struct KtMask {
    bool chartist = true;
    bool informed = true;
};

/// Largest KT violation: |dH| on positive components, max(0, -dH) on zero components.
/// Components for a signal the agent never receives do not move any price and are skipped.
[[nodiscard]] double kt_residual(const MarketInstance& instance, const Allocation& alloc, double eps,
                                 KtMask mask = {});

[[nodiscard]] EquilibriumResult solve(const MarketInstance& instance, double eps, const SolverOptions& options = {});

struct CrosscheckReport {
    double h_solver = 0.0;
    double h_dynamics = 0.0;
    /// |H(dynamics) - H(solver)| / H(solver)
    double h_rel_gap = 0.0;
    double distance_solver = 0.0;
    double distance_dynamics = 0.0;
    /// |d(dynamics) - d(solver)| / d(solver)
    double distance_rel_gap = 0.0;
};

/// Compares the learning run's time-averaged allocation with the solver's minimum.
[[nodiscard]] CrosscheckReport stationarity_crosscheck(const MarketInstance& instance, double eps,
                                                       const EquilibriumResult& result, const RunSummary& run);

} // namespace infoeff
