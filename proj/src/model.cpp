#include "infoeff/model.hpp"

#include "infoeff/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace infoeff {

void ModelParams::validate() const
{
    require(n_agents >= 1, "n_agents must be >= 1");
    require(n_states >= 1, "n_states must be >= 1");
    require(return_scale > 0.0 && std::isfinite(return_scale), "return_scale must be finite and > 0");
    require(mean_return > 0.0 && std::isfinite(mean_return), "mean_return must be finite and > 0");
    require(std::isfinite(info_cost), "info_cost must be finite");
}

MarketInstance::MarketInstance(ModelParams params, std::vector<double> returns, std::vector<std::int8_t> signals)
    : params_(params), returns_(std::move(returns)), signals_(std::move(signals))
{
    params_.validate();
    require(returns_.size() == params_.n_states, "returns must have n_states entries");
    require(signals_.size() == params_.n_agents * params_.n_states, "signals must be n_agents x n_states");
    for (auto k : signals_) require(k == 1 || k == -1, "signal entries must be +1 or -1");
    for (auto r : returns_) require(std::isfinite(r), "returns must be finite");
}

std::size_t MarketInstance::signal_count(std::size_t agent, SignalIndex m) const
{
    std::size_t count = 0;
    for (auto k : agent_signals(agent)) count += signal_index(k) == m;
    return count;
}

double Allocation::mean_informed() const noexcept
{
    return z.empty() ? 0.0 : total_informed() / (2.0 * static_cast<double>(z.size()));
}

double Allocation::total_informed() const noexcept
{
    double sum = 0.0;
    for (const auto& zi : z) sum += zi[kMinus] + zi[kPlus];
    return sum;
}

bool Allocation::nonnegative() const noexcept
{
    for (const auto& zi : z)
        if (!(zi[kMinus] >= 0.0 && zi[kPlus] >= 0.0)) return false;
    return z0[kMinus] >= 0.0 && z0[kPlus] >= 0.0;
}

Allocation Allocation::lerp(const Allocation& a, const Allocation& b, double lambda)
{
    require(a.n_agents() == b.n_agents(), "lerp: agent count mismatch");
    Allocation out(a.n_agents());
    for (std::size_t i = 0; i < a.n_agents(); ++i)
        for (SignalIndex m : {kMinus, kPlus}) out.z[i][m] = a.z[i][m] + lambda * (b.z[i][m] - a.z[i][m]);
    for (SignalIndex m : {kMinus, kPlus}) out.z0[m] = a.z0[m] + lambda * (b.z0[m] - a.z0[m]);
    return out;
}

MarketInstance sample_instance(const ModelParams& params)
{
    params.validate();
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double scale = params.return_scale / std::sqrt(static_cast<double>(params.n_agents));
    std::vector<double> returns(params.n_states);
    for (auto& r : returns) r = params.mean_return + scale * gauss(rng);

    std::vector<std::int8_t> signals(params.n_agents * params.n_states);
    for (auto& k : signals) k = (rng() >> 63) ? 1 : -1;

    return MarketInstance(params, std::move(returns), std::move(signals));
}

void check_dimensions(const MarketInstance& instance, const Allocation& alloc)
{
    if (alloc.n_agents() != instance.n_agents())
        throw ValidationError("allocation has " + std::to_string(alloc.n_agents()) + " agents, instance has "
                              + std::to_string(instance.n_agents()));
}

namespace {

// Informed contribution sum_i z_i^{k_i^omega} per state.
std::vector<double> informed_volume(const MarketInstance& instance, const Allocation& alloc)
{
    const std::size_t n_states = instance.n_states();
    std::vector<double> volume(n_states, 0.0);
    for (std::size_t i = 0; i < instance.n_agents(); ++i) {
        const auto row = instance.agent_signals(i);
        const auto& zi = alloc.z[i];
        for (std::size_t w = 0; w < n_states; ++w) volume[w] += zi[signal_index(row[w])];
    }
    return volume;
}

} // namespace

PriceTable clearing_prices(const MarketInstance& instance, const Allocation& alloc)
{
    check_dimensions(instance, alloc);
    const double inv_n = 1.0 / static_cast<double>(instance.n_agents());
    const auto volume = informed_volume(instance, alloc);
    PriceTable table;
    table.p.resize(instance.n_states());
    for (std::size_t w = 0; w < instance.n_states(); ++w)
        for (SignalIndex k0 : {kMinus, kPlus}) table.p[w][k0] = (volume[w] + alloc.z0[k0]) * inv_n;
    return table;
}

double payoff(const MarketInstance& instance, const Allocation& alloc, std::size_t trader)
{
    check_dimensions(instance, alloc);
    require(trader <= instance.n_agents(), "trader index out of range");
    const auto prices = clearing_prices(instance, alloc);

    double total = 0.0;
    for (std::size_t w = 0; w < instance.n_states(); ++w) {
        for (SignalIndex k0 : {kMinus, kPlus}) {
            const double z = trader == 0 ? alloc.z0[k0] : alloc.z[trader - 1][signal_index(instance.signal(trader - 1, w))];
            if (z == 0.0) continue;
            const double p = prices.at(w, k0);
            if (!(p > 0.0))
                throw DomainError("zero price with positive investment at state " + std::to_string(w) + ", k0="
                                  + (k0 == kPlus ? "+" : "-"));
            total += 0.5 * z * (instance.ret(w) / p - 1.0);
        }
    }
    return total / static_cast<double>(instance.n_states());
}

double squared_distance(const MarketInstance& instance, const Allocation& alloc)
{
    const auto prices = clearing_prices(instance, alloc);
    double sum = 0.0;
    for (std::size_t w = 0; w < instance.n_states(); ++w) {
        const double rm = instance.ret(w) - prices.at(w, kMinus);
        const double rp = instance.ret(w) - prices.at(w, kPlus);
        sum += 0.5 * (rm * rm + rp * rp);
    }
    return sum;
}

double hamiltonian_eps(const MarketInstance& instance, const Allocation& alloc, double eps)
{
    const double cost = eps / (2.0 * static_cast<double>(instance.n_agents())) * alloc.total_informed();
    return 0.5 * squared_distance(instance, alloc) + cost;
}

AllocationGradient hamiltonian_gradient(const MarketInstance& instance, const Allocation& alloc, double eps)
{
    check_dimensions(instance, alloc);
    const std::size_t n_agents = instance.n_agents();
    const std::size_t n_states = instance.n_states();
    const double inv_n = 1.0 / static_cast<double>(n_agents);

    // k0-averaged residual p_bar - R per state, and the per-k0 residual sums for the chartist.
    const auto volume = informed_volume(instance, alloc);
    const double z0_bar = 0.5 * (alloc.z0[kMinus] + alloc.z0[kPlus]);
    std::vector<double> mean_residual(n_states);
    AllocationGradient grad;
    for (std::size_t w = 0; w < n_states; ++w) {
        mean_residual[w] = (volume[w] + z0_bar) * inv_n - instance.ret(w);
        for (SignalIndex k0 : {kMinus, kPlus})
            grad.z0[k0] += 0.5 * ((volume[w] + alloc.z0[k0]) * inv_n - instance.ret(w)) * inv_n;
    }

    const double cost = eps / (2.0 * static_cast<double>(n_agents));
    grad.z.assign(n_agents, {cost, cost});
    for (std::size_t i = 0; i < n_agents; ++i) {
        const auto row = instance.agent_signals(i);
        std::array<double, 2> acc{0.0, 0.0};
        for (std::size_t w = 0; w < n_states; ++w) acc[signal_index(row[w])] += mean_residual[w];
        grad.z[i][kMinus] += acc[kMinus] * inv_n;
        grad.z[i][kPlus] += acc[kPlus] * inv_n;
    }
    return grad;
}

double distance_price_return(const MarketInstance& instance, const Allocation& alloc)
{
    return std::sqrt(squared_distance(instance, alloc));
}

} // namespace infoeff
