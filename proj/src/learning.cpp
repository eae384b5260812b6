#include "infoeff/learning.hpp"

#include "infoeff/errors.hpp"

#include <algorithm>
#include <cmath>

namespace infoeff {

void LearningConfig::validate() const
{
    require(gain > 0.0 && std::isfinite(gain), "gain must be finite and > 0");
    require(tol > 0.0, "tol must be > 0");
    require(avg_window >= 1, "avg_window must be >= 1");
    require(transient + avg_window <= t_max, "transient + avg_window must not exceed t_max");
    require(exp_cap > 0.0, "exp_cap must be > 0");
}

double chi(double u, const LearningConfig& config)
{
    const double x = config.gain * u;
    switch (config.chi_kind) {
    case ChiKind::exponential:
        return std::exp(std::min(x, config.exp_cap));
    case ChiKind::rectified_linear:
        return std::max(x, 0.0);
    }
    return 0.0;
}

double chi_inverse(double z, const LearningConfig& config)
{
    require(z > 0.0, "chi_inverse needs z > 0");
    switch (config.chi_kind) {
    case ChiKind::exponential:
        return std::log(z) / config.gain;
    case ChiKind::rectified_linear:
        return z / config.gain;
    }
    return 0.0;
}

double step_cost(const LearningConfig& config, double eps, std::size_t n_agents, std::size_t n_states)
{
    switch (config.cost_convention) {
    case CostConvention::paper_literal:
        return eps / static_cast<double>(n_agents);
    case CostConvention::objective_matched:
        return eps / (2.0 * static_cast<double>(n_states));
    }
    return 0.0;
}

PropensityState initial_state(const MarketInstance& instance, const LearningConfig& config, std::int8_t k0)
{
    const double u = chi_inverse(instance.params().mean_return, config);
    PropensityState state;
    state.u.assign(instance.n_agents(), {u, u});
    state.u0 = {u, u};
    state.k0 = k0 > 0 ? 1 : -1;
    return state;
}

Allocation allocation_of(const PropensityState& state, const LearningConfig& config, bool chartist_enabled)
{
    Allocation alloc(state.u.size());
    for (std::size_t i = 0; i < state.u.size(); ++i)
        for (SignalIndex m : {kMinus, kPlus}) alloc.z[i][m] = chi(state.u[i][m], config);
    if (chartist_enabled)
        for (SignalIndex m : {kMinus, kPlus}) alloc.z0[m] = chi(state.u0[m], config);
    return alloc;
}

StepRecord step(PropensityState& state, const MarketInstance& instance, std::size_t omega,
                const LearningConfig& config, double eps, bool chartist_enabled)
{
    const std::size_t n_agents = instance.n_agents();
    require(omega < instance.n_states(), "state index out of range");
    require(state.u.size() == n_agents, "propensity state does not match instance");

    const SignalIndex k0 = signal_index(state.k0);
    const double z0_minus = chartist_enabled ? chi(state.u0[kMinus], config) : 0.0;
    const double z0_plus = chartist_enabled ? chi(state.u0[kPlus], config) : 0.0;

    double volume = k0 == kPlus ? z0_plus : z0_minus;
    for (std::size_t i = 0; i < n_agents; ++i)
        volume += chi(state.u[i][signal_index(instance.signal(i, omega))], config);
    const double price = volume / static_cast<double>(n_agents);
    const double excess = instance.ret(omega) - price;

    const double cost = step_cost(config, eps, n_agents, instance.n_states());
    for (std::size_t i = 0; i < n_agents; ++i) {
        auto& ui = state.u[i];
        ui[signal_index(instance.signal(i, omega))] += excess;
        ui[kMinus] -= cost;
        ui[kPlus] -= cost;
    }
    if (chartist_enabled) state.u0[k0] += excess;

    StepRecord record;
    record.omega = omega;
    record.k0 = state.k0;
    record.price = price;
    record.excess = excess;
    record.z0_plus = z0_plus;
    record.z0_minus = z0_minus;

    state.k0 = public_signal(excess);
    return record;
}

namespace {

double relative_drift(const Allocation& current, const Allocation& previous)
{
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < current.n_agents(); ++i)
        for (SignalIndex m : {kMinus, kPlus}) {
            diff = std::max(diff, std::abs(current.z[i][m] - previous.z[i][m]));
            scale = std::max(scale, std::abs(previous.z[i][m]));
        }
    for (SignalIndex m : {kMinus, kPlus}) {
        diff = std::max(diff, std::abs(current.z0[m] - previous.z0[m]));
        scale = std::max(scale, std::abs(previous.z0[m]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

// Running sums for one averaging window.
struct WindowAccumulator {
    std::vector<std::array<double, 2>> z_sum;
    std::array<double, 2> z0_traded{0.0, 0.0};
    std::array<std::uint64_t, 2> z0_count{0, 0};
    std::array<double, 2> z0_all{0.0, 0.0};
    std::uint64_t steps = 0;

    explicit WindowAccumulator(std::size_t n_agents) : z_sum(n_agents, {0.0, 0.0}) {}

    [[nodiscard]] Allocation mean() const
    {
        Allocation out(z_sum.size());
        const double inv = 1.0 / static_cast<double>(steps);
        for (std::size_t i = 0; i < z_sum.size(); ++i)
            for (SignalIndex m : {kMinus, kPlus}) out.z[i][m] = z_sum[i][m] * inv;
        for (SignalIndex m : {kMinus, kPlus})
            out.z0[m] = z0_count[m] > 0 ? z0_traded[m] / static_cast<double>(z0_count[m]) : z0_all[m] * inv;
        return out;
    }
};

} // namespace

RunSummary run(const ModelParams& params, const MarketInstance& instance, const LearningConfig& config,
               bool chartist_enabled)
{
    params.validate();
    config.validate();
    require(params.n_agents == instance.n_agents() && params.n_states == instance.n_states(),
            "params do not match instance dimensions");

    const double eps = params.info_cost;
    const std::size_t n_agents = instance.n_agents();
    const double n = static_cast<double>(n_agents);

    std::mt19937_64 rng(config.seed);
    const std::int8_t k0_start = (rng() >> 63) ? 1 : -1;
    std::uniform_int_distribution<std::size_t> draw_state(0, instance.n_states() - 1);

    PropensityState state = initial_state(instance, config, k0_start);
    if (!chartist_enabled) state.u0 = {0.0, 0.0};

    RunSummary summary;
    summary.exp_cap = config.exp_cap;

    WindowAccumulator window(n_agents);
    bool have_previous = false;
    Allocation previous;

    for (std::uint64_t t = 0; t < config.t_max; ++t) {
        const std::size_t omega = draw_state(rng);
        const bool averaging = t >= config.transient;
        const bool recording = config.record_stride > 0 && t % config.record_stride == 0;

        if (averaging) {
            for (std::size_t i = 0; i < n_agents; ++i)
                for (SignalIndex m : {kMinus, kPlus}) window.z_sum[i][m] += chi(state.u[i][m], config);
        }
        Allocation snapshot;
        if (recording) snapshot = allocation_of(state, config, chartist_enabled);

        StepRecord record = step(state, instance, omega, config, eps, chartist_enabled);
        record.t = t;
        summary.steps = t + 1;

        if (averaging) {
            const SignalIndex k0 = signal_index(record.k0);
            window.z0_traded[k0] += k0 == kPlus ? record.z0_plus : record.z0_minus;
            ++window.z0_count[k0];
            window.z0_all[kMinus] += record.z0_minus;
            window.z0_all[kPlus] += record.z0_plus;
            ++window.steps;
        }
        if (recording) {
            record.h_eps = hamiltonian_eps(instance, snapshot, eps);
            record.distance = distance_price_return(instance, snapshot);
            summary.records.push_back(record);
        }

        if (averaging && window.steps == config.avg_window) {
            Allocation mean = window.mean();
            summary.distance_series.push_back(distance_price_return(instance, mean));
            summary.h_series.push_back(hamiltonian_eps(instance, mean, eps));
            summary.z0_percap_series.push_back(0.5 * (mean.z0[kMinus] + mean.z0[kPlus]) / n);
            summary.z0_plus_series.push_back(mean.z0[kPlus]);
            summary.z0_minus_series.push_back(mean.z0[kMinus]);
            if (have_previous) {
                summary.last_drift = relative_drift(mean, previous);
                summary.converged = summary.last_drift < config.tol;
            }
            previous = std::move(mean);
            have_previous = true;
            window = WindowAccumulator(n_agents);
            if (summary.converged && config.stop_on_convergence) break;
        }
    }

    if (have_previous) summary.mean_alloc = std::move(previous);
    else if (window.steps > 0) summary.mean_alloc = window.mean();
    else summary.mean_alloc = Allocation(n_agents);
    return summary;
}

} // namespace infoeff
