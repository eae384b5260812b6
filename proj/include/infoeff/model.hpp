#pragma once

// Market data types and the static quantities of the single-asset market:
// clearing prices, payoffs, the cost-augmented objective H_eps and its gradient.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace infoeff {

/// Index of a binary signal value: 0 for "-", 1 for "+".
using SignalIndex = std::size_t;
inline constexpr SignalIndex kMinus = 0;
inline constexpr SignalIndex kPlus = 1;

constexpr SignalIndex signal_index(std::int8_t k) noexcept { return k > 0 ? kPlus : kMinus; }

struct ModelParams {
    std::size_t n_agents = 1;  // N, informed traders
    std::size_t n_states = 1;  // Omega
    double info_cost = 0.0;    // eps, may be negative
    double mean_return = 1.0;  // R_bar
    double return_scale = 1.0; // s
    std::uint64_t seed = 0;

    /// n = N / Omega.
    [[nodiscard]] double load() const noexcept
    {
        return static_cast<double>(n_agents) / static_cast<double>(n_states);
    }

    /// Throws ValidationError unless N >= 1, Omega >= 1, s > 0, R_bar > 0.
    void validate() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// One quenched-disorder draw: returns per state and the N x Omega signal table.
class MarketInstance {
public:
    /// Builds an instance from explicit data; validates dimensions and signal values.
    MarketInstance(ModelParams params, std::vector<double> returns, std::vector<std::int8_t> signals);

    [[nodiscard]] const ModelParams& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t n_agents() const noexcept { return params_.n_agents; }
    [[nodiscard]] std::size_t n_states() const noexcept { return params_.n_states; }

    [[nodiscard]] std::span<const double> returns() const noexcept { return returns_; }
    [[nodiscard]] double ret(std::size_t state) const { return returns_[state]; }

    /// Row-major N x Omega table of +-1.
    [[nodiscard]] std::span<const std::int8_t> signals() const noexcept { return signals_; }
    [[nodiscard]] std::int8_t signal(std::size_t agent, std::size_t state) const
    {
        return signals_[agent * params_.n_states + state];
    }
    [[nodiscard]] std::span<const std::int8_t> agent_signals(std::size_t agent) const
    {
        return std::span<const std::int8_t>(signals_).subspan(agent * params_.n_states, params_.n_states);
    }

    /// Number of states in which agent i receives signal m.
    [[nodiscard]] std::size_t signal_count(std::size_t agent, SignalIndex m) const;

    friend bool operator==(const MarketInstance&, const MarketInstance&) = default;

private:
    ModelParams params_;
    std::vector<double> returns_;
    std::vector<std::int8_t> signals_;
};

/// Investments: z[i][m] for informed agents, z0[k0] for the chartist.
struct Allocation {
    std::vector<std::array<double, 2>> z;
    std::array<double, 2> z0{0.0, 0.0};

    Allocation() = default;
    explicit Allocation(std::size_t n_agents, double informed = 0.0, double chartist = 0.0)
        : z(n_agents, {informed, informed}), z0{chartist, chartist}
    {
    }

    [[nodiscard]] std::size_t n_agents() const noexcept { return z.size(); }

    /// (z+ - z-) / 2
    [[nodiscard]] double delta(std::size_t i) const noexcept { return 0.5 * (z[i][kPlus] - z[i][kMinus]); }
    /// (z+ + z-) / 2
    [[nodiscard]] double mean(std::size_t i) const noexcept { return 0.5 * (z[i][kPlus] + z[i][kMinus]); }

    /// Mean over agents and signals of z_i^m.
    [[nodiscard]] double mean_informed() const noexcept;
    /// Sum over agents and signals of z_i^m.
    [[nodiscard]] double total_informed() const noexcept;

    [[nodiscard]] bool nonnegative() const noexcept;

    /// a + lambda * (b - a); used for convex combinations in tests and diagnostics.
    [[nodiscard]] static Allocation lerp(const Allocation& a, const Allocation& b, double lambda);

    friend bool operator==(const Allocation&, const Allocation&) = default;
};

/// Same layout as Allocation but without the sign invariant.
struct AllocationGradient {
    std::vector<std::array<double, 2>> z;
    std::array<double, 2> z0{0.0, 0.0};
};

/// p[omega][k0], k0 indexed like SignalIndex.
struct PriceTable {
    std::vector<std::array<double, 2>> p;

    [[nodiscard]] double at(std::size_t state, SignalIndex k0) const { return p[state][k0]; }
};

/// Draws returns R = R_bar + s*g/sqrt(N) and fair +-1 signals from a stream seeded by params.seed.
[[nodiscard]] MarketInstance sample_instance(const ModelParams& params);

/// N p = sum_i z_i^{k_i} + z0^{k0}
[[nodiscard]] PriceTable clearing_prices(const MarketInstance& instance, const Allocation& alloc);

/// Expected payoff of trader `trader` (0 = chartist, 1..N = informed), averaged over
/// states and over the public signal. Throws DomainError on a zero price paired
/// with a positive investment.
[[nodiscard]] double payoff(const MarketInstance& instance, const Allocation& alloc, std::size_t trader);

/// sum_omega E_k0 (R - p)^2, mean of squares over k0.
[[nodiscard]] double squared_distance(const MarketInstance& instance, const Allocation& alloc);

/// 1/2 sum_omega E_k0 (R - p)^2 + eps/(2N) sum_{i,m} z_i^m. The chartist pays no cost.
[[nodiscard]] double hamiltonian_eps(const MarketInstance& instance, const Allocation& alloc, double eps);

/// Exact partial derivatives of hamiltonian_eps with respect to every component.
[[nodiscard]] AllocationGradient hamiltonian_gradient(const MarketInstance& instance, const Allocation& alloc,
                                                      double eps);

/// |p - R| = sqrt(squared_distance).
[[nodiscard]] double distance_price_return(const MarketInstance& instance, const Allocation& alloc);

/// Throws ValidationError if the allocation's agent count differs from the instance's.
void check_dimensions(const MarketInstance& instance, const Allocation& alloc);

} // namespace infoeff
