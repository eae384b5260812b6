#include "infoeff/diagnostics.hpp"

#include "infoeff/errors.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace infoeff {

std::uint64_t count_indistinguishable_pairs(const MarketInstance& instance)
{
    // Group states by their signal column; a group of size c contributes c(c-1)/2 pairs.
    std::map<std::vector<std::int8_t>, std::uint64_t> columns;
    std::vector<std::int8_t> column(instance.n_agents());
    for (std::size_t w = 0; w < instance.n_states(); ++w) {
        for (std::size_t i = 0; i < instance.n_agents(); ++i) column[i] = instance.signal(i, w);
        ++columns[column];
    }
    std::uint64_t pairs = 0;
    for (const auto& [key, c] : columns) pairs += c * (c - 1) / 2;
    return pairs;
}

double indistinguishable_bound(std::size_t n_agents, std::size_t n_states)
{
    require(n_agents >= 1 && n_states >= 1, "indistinguishable_bound: N and Omega must be >= 1");
    const double omega = static_cast<double>(n_states);
    return omega * (omega - 1.0) * std::ldexp(1.0, -static_cast<int>(n_agents + 1));
}

std::optional<double> conditional_mean_gap(const MarketInstance& instance, std::size_t agent)
{
    require(agent < instance.n_agents(), "agent index out of range");
    double sum[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    const auto row = instance.agent_signals(agent);
    for (std::size_t w = 0; w < instance.n_states(); ++w) {
        const auto m = signal_index(row[w]);
        sum[m] += instance.ret(w);
        ++count[m];
    }
    if (count[kMinus] == 0 || count[kPlus] == 0) return std::nullopt;
    return std::abs(sum[kPlus] / static_cast<double>(count[kPlus]) - sum[kMinus] / static_cast<double>(count[kMinus]));
}

double signal_information(const MarketInstance& instance, std::size_t agent)
{
    require(agent < instance.n_agents(), "agent index out of range");
    const double p = static_cast<double>(instance.signal_count(agent, kPlus)) / static_cast<double>(instance.n_states());
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

bool signals_identify_state(const MarketInstance& instance) { return count_indistinguishable_pairs(instance) == 0; }

} // namespace infoeff
