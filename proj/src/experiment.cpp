#include "infoeff/experiment.hpp"

#include "infoeff/errors.hpp"
#include "infoeff/replica.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

namespace infoeff {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Runs task(0..count-1) on up to `threads` workers; results are written by index so order is fixed.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task)
{
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (workers == 1) {
        for (std::size_t k = 0; k < count; ++k) task(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < count; k = next++) task(k);
        });
}

struct Attempt {
    RealizationOutcome outcome;
    std::string error;
    bool ok = false;
};

SweepRow aggregate(double value, Engine engine, const std::vector<Attempt>& attempts)
{
    SweepRow row;
    row.value = value;
    row.engine = engine;
    std::vector<double> distance, z0, zf, h;
    for (const auto& a : attempts) {
        if (!a.ok) {
            ++row.failures;
            if (row.first_error.empty()) row.first_error = a.error;
            continue;
        }
        distance.push_back(a.outcome.distance);
        z0.push_back(a.outcome.z0_percap);
        zf.push_back(a.outcome.z_fund);
        h.push_back(a.outcome.h_eps);
        row.kt_max = std::max(row.kt_max, a.outcome.kt);
        row.unconverged += a.outcome.converged ? 0 : 1;
    }
    row.distance = mean_se(distance);
    row.z0_percap = mean_se(z0);
    row.z_fund = mean_se(zf);
    row.h_eps = mean_se(h);
    return row;
}

double relative_deviation(double sim, double model) { return (sim - model) / sim; }

// k minimizing sum ((sim - k model) / sim)^2 over points with a model value and sim > 0.
double fit_scale(const std::vector<double>& sim, const std::vector<std::optional<double>>& model)
{
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < sim.size(); ++j) {
        if (!model[j] || !(sim[j] > 0.0)) continue;
        const double ratio = *model[j] / sim[j];
        num += ratio;
        den += ratio * ratio;
    }
    return den > 0.0 ? num / den : 1.0;
}

} // namespace

double alpha_for_load(AlphaMap map, double n)
{
    require(n > 0.0, "load n must be > 0");
    return map == AlphaMap::identity ? n : 1.0 / n;
}

bool inefficient_phase(AlphaMap map, double n) { return alpha_for_load(map, n) > kCriticalAlphaZeroCost; }

std::optional<ReplicaOverlay> replica_overlay(const Calibration& calibration, double n, double eps, double s,
                                              double r_bar)
{
    if (!(eps > 0.0)) return std::nullopt;
    try {
        const double alpha = alpha_for_load(calibration.map, n);
        const double tau = tau_for_alpha(alpha, eps, s);
        const auto sol = solve_fixed_eps_point(eps, s, r_bar, tau);
        return ReplicaOverlay{calibration.k_distance * std::sqrt(sol.h_mean / n), calibration.k_z0 * sol.z0_percap};
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

void SweepSpec::validate() const
{
    require(!values.empty(), "sweep values must be nonempty");
    require(n_states >= 1, "omega must be >= 1");
    require(realizations >= 2, "realizations must be >= 2");
    for (double v : values) {
        const double n = swept == SweepVariable::n ? v : fixed;
        require(n > 0.0 && std::lround(n * static_cast<double>(n_states)) >= 1,
                "every n must give N = round(n * omega) >= 1");
        require(std::isfinite(v), "sweep values must be finite");
    }
    if (engine != Engine::equilibrium) learning.validate();
    if (engine != Engine::dynamics) solver.validate();
}

ModelParams SweepSpec::params_for(double value, std::uint64_t seed) const
{
    const double n = swept == SweepVariable::n ? value : fixed;
    ModelParams params;
    params.n_states = n_states;
    params.n_agents = static_cast<std::size_t>(std::lround(n * static_cast<double>(n_states)));
    params.info_cost = swept == SweepVariable::n ? fixed : value;
    params.mean_return = mean_return;
    params.return_scale = return_scale;
    params.seed = seed;
    return params;
}

std::uint64_t realization_seed(std::uint64_t base_seed, double value, std::uint64_t realization)
{
    return base_seed ^ splitmix64(splitmix64(std::bit_cast<std::uint64_t>(value)) + realization);
}

std::uint64_t dynamics_seed(std::uint64_t instance_seed) { return splitmix64(instance_seed ^ 0xd1b54a32d192ed03ULL); }

RealizationOutcome run_realization(const SweepSpec& spec, double value, std::uint64_t realization, Engine engine)
{
    require(engine != Engine::both, "run_realization needs a single engine");
    const auto params = spec.params_for(value, realization_seed(spec.base_seed, value, realization));
    const auto instance = sample_instance(params);
    const double eps = params.info_cost;
    const double n = static_cast<double>(params.n_agents);

    RealizationOutcome out;
    Allocation alloc;
    if (engine == Engine::equilibrium) {
        SolverOptions options = spec.solver;
        options.chartist = spec.chartist;
        const auto result = solve(instance, eps, options);
        alloc = result.alloc;
        out.kt = result.kt_residual;
        out.converged = result.converged;
    } else {
        LearningConfig config = spec.learning;
        config.seed = dynamics_seed(params.seed);
        const auto summary = run(params, instance, config, spec.chartist);
        alloc = summary.mean_alloc;
        out.kt = kt_residual(instance, alloc, eps, KtMask{spec.chartist, true});
        out.converged = summary.converged;
    }
    out.distance = distance_price_return(instance, alloc);
    out.z0_percap = 0.5 * (alloc.z0[kMinus] + alloc.z0[kPlus]) / n;
    out.z_fund = alloc.mean_informed();
    out.h_eps = hamiltonian_eps(instance, alloc, eps);
    return out;
}

Stat mean_se(const std::vector<double>& samples)
{
    Stat stat;
    if (samples.empty()) return {std::nan(""), std::nan("")};
    double sum = 0.0;
    for (double x : samples) sum += x;
    stat.mean = sum / static_cast<double>(samples.size());
    if (samples.size() < 2) return stat;
    double ss = 0.0;
    for (double x : samples) ss += (x - stat.mean) * (x - stat.mean);
    const double count = static_cast<double>(samples.size());
    stat.se = std::sqrt(ss / (count - 1.0) / count);
    return stat;
}

std::vector<SweepRow> sweep(const SweepSpec& spec)
{
    spec.validate();
    std::vector<Engine> engines;
    if (spec.engine == Engine::both) engines = {Engine::dynamics, Engine::equilibrium};
    else engines = {spec.engine};

    const std::size_t per_value = spec.realizations * engines.size();
    std::vector<Attempt> attempts(spec.values.size() * per_value);
    parallel_for(attempts.size(), spec.threads, [&](std::size_t k) {
        const std::size_t v = k / per_value;
        const std::size_t e = (k % per_value) / spec.realizations;
        const std::size_t r = k % spec.realizations;
        auto& slot = attempts[k];
        try {
            slot.outcome = run_realization(spec, spec.values[v], r, engines[e]);
            slot.ok = true;
        } catch (const std::exception& ex) {
            slot.error = ex.what();
        }
    });

    std::vector<SweepRow> rows;
    for (std::size_t v = 0; v < spec.values.size(); ++v) {
        for (std::size_t e = 0; e < engines.size(); ++e) {
            const auto first = attempts.begin() + static_cast<std::ptrdiff_t>(v * per_value + e * spec.realizations);
            std::vector<Attempt> slice(first, first + static_cast<std::ptrdiff_t>(spec.realizations));
            SweepRow row = aggregate(spec.values[v], engines[e], slice);
            if (spec.calibration) {
                const double n = spec.swept == SweepVariable::n ? spec.values[v] : spec.fixed;
                const double eps = spec.swept == SweepVariable::n ? spec.fixed : spec.values[v];
                if (auto overlay = replica_overlay(*spec.calibration, n, eps, spec.return_scale, spec.mean_return)) {
                    row.replica_distance = overlay->distance;
                    row.replica_z0pc = overlay->z0_percap;
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

CalibrationReport fit_alpha_map(const CalibrationSpec& spec, std::vector<SweepRow> rows)
{
    CalibrationReport report;
    report.n_grid = spec.n_grid;
    report.rows = std::move(rows);
    if (spec.n_grid.size() < 2) {
        report.note = "insufficient data: at least two grid points are needed to fit a scale and compare shapes";
        return report;
    }

    std::vector<double> sim_distance, sim_z0;
    for (const auto& row : report.rows) {
        sim_distance.push_back(row.distance.mean);
        sim_z0.push_back(row.z0_percap.mean);
    }

    for (AlphaMap map : {AlphaMap::identity, AlphaMap::inverse}) {
        CandidateFit fit;
        fit.map = map;
        std::vector<std::optional<double>> model_distance, model_z0;
        for (double n : spec.n_grid) {
            const auto overlay = replica_overlay(Calibration{map, 1.0, 1.0}, n, spec.eps, spec.return_scale, spec.mean_return);
            model_distance.push_back(overlay ? std::optional(overlay->distance) : std::nullopt);
            model_z0.push_back(overlay ? std::optional(overlay->z0_percap) : std::nullopt);
        }
        fit.k_distance = fit_scale(sim_distance, model_distance);
        fit.k_z0 = fit_scale(sim_z0, model_z0);

        fit.ssd = 0.0;
        for (std::size_t j = 0; j < spec.n_grid.size(); ++j) {
            const double d = model_distance[j] ? fit.k_distance * *model_distance[j] : std::nan("");
            const double z = model_z0[j] ? fit.k_z0 * *model_z0[j] : std::nan("");
            fit.replica_distance.push_back(d);
            fit.replica_z0pc.push_back(z);
            fit.ssd += model_distance[j] ? std::pow(relative_deviation(sim_distance[j], d), 2) : 1.0;
            if (sim_z0[j] > 0.0) fit.ssd += model_z0[j] ? std::pow(relative_deviation(sim_z0[j], z), 2) : 1.0;
        }

        fit.monotone_consistent = true;
        for (std::size_t j = 0; j + 1 < spec.n_grid.size(); ++j) {
            const double sim_step = sim_distance[j + 1] - sim_distance[j];
            const double model_step = fit.replica_distance[j + 1] - fit.replica_distance[j];
            if (!(sim_step * model_step > 0.0)) fit.monotone_consistent = false;
        }
        report.candidates.push_back(std::move(fit));
    }

    const auto best = std::min_element(report.candidates.begin(), report.candidates.end(),
                                       [](const CandidateFit& a, const CandidateFit& b) { return a.ssd < b.ssd; });
    report.selected = best->map;
    report.calibration = Calibration{best->map, best->k_distance, best->k_z0};
    report.sufficient = true;
    return report;
}

CalibrationReport calibrate_alpha_map(const CalibrationSpec& spec)
{
    require(spec.eps > 0.0, "calibration needs eps > 0");
    require(!spec.n_grid.empty(), "calibration grid must be nonempty");

    SweepSpec sweep_spec;
    sweep_spec.swept = SweepVariable::n;
    sweep_spec.values = spec.n_grid;
    sweep_spec.fixed = spec.eps;
    sweep_spec.n_states = spec.n_states;
    sweep_spec.realizations = spec.realizations;
    sweep_spec.engine = Engine::equilibrium;
    sweep_spec.chartist = true;
    sweep_spec.base_seed = spec.base_seed;
    sweep_spec.mean_return = spec.mean_return;
    sweep_spec.return_scale = spec.return_scale;
    sweep_spec.threads = spec.threads;
    return fit_alpha_map(spec, sweep(sweep_spec));
}

const char* to_string(Engine engine)
{
    switch (engine) {
    case Engine::dynamics: return "dynamics";
    case Engine::equilibrium: return "equilibrium";
    case Engine::both: return "both";
    }
    return "?";
}

const char* to_string(AlphaMap map) { return map == AlphaMap::identity ? "alpha=n" : "alpha=1/n"; }

const char* to_string(SweepVariable variable) { return variable == SweepVariable::n ? "n" : "eps"; }

} // namespace infoeff
