#pragma once

// Online adaptation of investment propensities. Each period a state is drawn,
// investments z = chi(U) clear the market, and every propensity moves by the
// realized excess return (when its signal fired) minus the information cost.

#include "infoeff/model.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace infoeff {

enum class ChiKind { exponential, rectified_linear };

/// How the per-step information cost relates to eps.
/// paper_literal: eps/N per step. objective_matched: eps/(2 Omega) per step, which makes
/// the expected drift exactly -(N/Omega) times the gradient of H_eps.
enum class CostConvention { paper_literal, objective_matched };

struct LearningConfig {
    ChiKind chi_kind = ChiKind::exponential;
    double gain = 0.1; // Gamma
    CostConvention cost_convention = CostConvention::objective_matched;
    std::uint64_t t_max = 2'000'000;
    std::uint64_t transient = 200'000;
    std::uint64_t avg_window = 200'000;
    double tol = 1e-2;
    std::uint64_t seed = 0;
    /// Record every `record_stride`-th step into RunSummary::records; 0 disables recording.
    std::uint64_t record_stride = 0;
    /// Cap on Gamma*u inside the exponential.
    double exp_cap = 100.0;
    /// Stop at the first window pair that satisfies `tol`.
    bool stop_on_convergence = true;

    void validate() const;
};

struct PropensityState {
    std::vector<std::array<double, 2>> u;
    std::array<double, 2> u0{0.0, 0.0};
    std::int8_t k0 = 1; // current public signal

    friend bool operator==(const PropensityState&, const PropensityState&) = default;
};

struct StepRecord {
    std::uint64_t t = 0;
    std::size_t omega = 0;
    std::int8_t k0 = 1;
    double price = 0.0;
    double excess = 0.0;
    double z0_plus = 0.0;
    double z0_minus = 0.0;
    // Only filled for recorded steps; NaN otherwise.
    double h_eps = std::numeric_limits<double>::quiet_NaN();
    double distance = std::numeric_limits<double>::quiet_NaN();

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct RunSummary {
    /// Time average over the final window. Chartist entries average z0^m over the
    /// steps on which the public signal was m (the investment actually traded).
    Allocation mean_alloc;
    /// One entry per completed averaging window.
    std::vector<double> distance_series;
    std::vector<double> h_series;
    std::vector<double> z0_percap_series;
    std::vector<double> z0_plus_series;
    std::vector<double> z0_minus_series;
    std::vector<StepRecord> records;
    bool converged = false;
    std::uint64_t steps = 0;
    double last_drift = std::numeric_limits<double>::infinity();
    double exp_cap = 0.0;
};

/// exponential: exp(Gamma u) with Gamma u capped at config.exp_cap; rectified-linear: max(Gamma u, 0).
[[nodiscard]] double chi(double u, const LearningConfig& config);

/// A propensity mapping to investment z > 0.
[[nodiscard]] double chi_inverse(double z, const LearningConfig& config);

/// +1 for a positive (or exactly zero) excess return, -1 for a negative one.
[[nodiscard]] constexpr std::int8_t public_signal(double prev_excess) noexcept { return prev_excess < 0.0 ? -1 : 1; }

/// Per-step cost subtracted from every informed propensity.
[[nodiscard]] double step_cost(const LearningConfig& config, double eps, std::size_t n_agents, std::size_t n_states);

/// All propensities at chi^{-1}(R_bar); k0 as given.
[[nodiscard]] PropensityState initial_state(const MarketInstance& instance, const LearningConfig& config,
                                            std::int8_t k0);

/// Current investments implied by the propensities (z0 pinned to 0 when the chartist is disabled).
[[nodiscard]] Allocation allocation_of(const PropensityState& state, const LearningConfig& config,
                                       bool chartist_enabled = true);

/// Advances `state` by one period in state `omega` and returns the period's record.
StepRecord step(PropensityState& state, const MarketInstance& instance, std::size_t omega,
                const LearningConfig& config, double eps, bool chartist_enabled = true);

/// Iterates `step` with i.i.d. uniform states until convergence or t_max.
[[nodiscard]] RunSummary run(const ModelParams& params, const MarketInstance& instance, const LearningConfig& config,
                             bool chartist_enabled = true);

} // namespace infoeff
