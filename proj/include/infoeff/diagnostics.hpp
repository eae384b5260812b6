#pragma once

// Information content of the private signals and whether the full signal set pins down the state.

#include "infoeff/model.hpp"

#include <cstdint>
#include <optional>

namespace infoeff {

/// Unordered state pairs (w, w') that every agent's signal fails to separate.
[[nodiscard]] std::uint64_t count_indistinguishable_pairs(const MarketInstance& instance);

/// Omega (Omega - 1) 2^{-(N+1)}, the expected pair count and an upper bound on P{pairs > 0}.
[[nodiscard]] double indistinguishable_bound(std::size_t n_agents, std::size_t n_states);

/// |E[R | k_i = +] - E[R | k_i = -]|; empty when agent i's signal never takes one of the values.
[[nodiscard]] std::optional<double> conditional_mean_gap(const MarketInstance& instance, std::size_t agent);

/// Mutual information in bits between the uniform state and agent i's signal,
/// i.e. the binary entropy of the signal's split. 0 for a one-sided signal.
[[nodiscard]] double signal_information(const MarketInstance& instance, std::size_t agent);

/// Whether the state -> full signal vector map is injective.
[[nodiscard]] bool signals_identify_state(const MarketInstance& instance);

} // namespace infoeff
