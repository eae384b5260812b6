#include "infoeff/cli.hpp"

#include "infoeff/errors.hpp"
#include "infoeff/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace infoeff {

namespace {

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::string format = "csv";
    bool quiet = false;
};

struct InstanceOptions {
    std::string instance_path;
    std::size_t n_agents = 32;
    std::size_t n_states = 16;
    std::optional<double> eps;
    double mean_return = 1.0;
    double scale = 1.0;

    void add_to(CLI::App& cmd)
    {
        cmd.add_option("--instance", instance_path, "Instance JSON written by `gen`");
        cmd.add_option("--n-agents", n_agents, "Informed traders N")->check(CLI::PositiveNumber);
        cmd.add_option("--n-states", n_states, "States Omega")->check(CLI::PositiveNumber);
        cmd.add_option("--eps", eps, "Information cost");
        cmd.add_option("--mean-return", mean_return, "R_bar");
        cmd.add_option("--scale", scale, "Return scale s");
    }

    [[nodiscard]] MarketInstance load(const GlobalOptions& global) const
    {
        if (!instance_path.empty()) return instance_from_json(read_json_file(instance_path));
        ModelParams params;
        params.n_agents = n_agents;
        params.n_states = n_states;
        params.info_cost = eps.value_or(0.0);
        params.mean_return = mean_return;
        params.return_scale = scale;
        params.seed = global.seed.value_or(0);
        return sample_instance(params);
    }

    [[nodiscard]] double cost(const MarketInstance& instance) const { return eps.value_or(instance.params().info_cost); }
};

// Writes to --out when given, else to the provided stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ValidationError("cannot open " + path + " for writing");
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

std::vector<double> parse_range(const std::string& text)
{
    // start:stop:step, inclusive of stop within half a step
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            parts.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ValidationError("bad range '" + text + "', expected start:stop:step");
        }
    }
    require(parts.size() == 3, "bad range '" + text + "', expected start:stop:step");
    const double start = parts[0];
    const double stop = parts[1];
    const double step = parts[2];
    require(step != 0.0 && (stop - start) / step >= 0.0, "range step must move from start toward stop");
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) grid.push_back(start + static_cast<double>(k) * step);
    return grid;
}

std::string timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ChiKind parse_chi(const std::string& s) { return s == "relu" ? ChiKind::rectified_linear : ChiKind::exponential; }

CostConvention parse_cost(const std::string& s)
{
    return s == "paper-literal" ? CostConvention::paper_literal : CostConvention::objective_matched;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Information-efficiency market simulator and equilibrium solver", "infoeff"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions global;
    app.add_option("--seed", global.seed, "Seed for instance sampling / base seed for sweeps");
    app.add_option("--out", global.out_path, "Output file (default stdout)");
    app.add_option("--format", global.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--quiet", global.quiet, "Suppress logs and the CSV timestamp header");

    // gen
    auto* gen = app.add_subcommand("gen", "Sample a market instance and write it as JSON");
    InstanceOptions gen_opts;
    gen_opts.add_to(*gen);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run the learning dynamics and write the step series as CSV");
    InstanceOptions sim_opts;
    sim_opts.add_to(*simulate);
    LearningConfig learning;
    std::string chi_name = "exponential";
    std::string cost_name = "objective-matched";
    std::optional<std::uint64_t> run_seed;
    bool sim_no_chartist = false;
    learning.record_stride = 1000;
    simulate->add_option("--gain", learning.gain, "Gain Gamma inside chi")->check(CLI::PositiveNumber);
    simulate->add_option("--chi", chi_name, "Investment map")->check(CLI::IsMember({"exponential", "relu"}));
    simulate->add_option("--cost", cost_name, "Per-step cost convention")
        ->check(CLI::IsMember({"objective-matched", "paper-literal"}));
    simulate->add_option("--t-max", learning.t_max, "Step budget");
    simulate->add_option("--transient", learning.transient, "Steps discarded before averaging");
    simulate->add_option("--window", learning.avg_window, "Averaging window");
    simulate->add_option("--tol", learning.tol, "Relative drift between consecutive windows");
    simulate->add_option("--stride", learning.record_stride, "Record every k-th step (0 = none)");
    simulate->add_option("--run-seed", run_seed, "Seed of the state/public-signal stream");
    simulate->add_flag("--no-chartist", sim_no_chartist, "Pin the chartist's investment to zero");

    // equilibrium
    auto* equilibrium = app.add_subcommand("equilibrium", "Minimize H_eps and certify the KT conditions");
    InstanceOptions eq_opts;
    eq_opts.add_to(*equilibrium);
    SolverOptions solver;
    std::string method_name = "coordinate-descent";
    bool untied = false;
    bool eq_no_chartist = false;
    equilibrium->add_option("--method", method_name, "Solver")
        ->check(CLI::IsMember({"coordinate-descent", "projected-gradient"}));
    equilibrium->add_option("--kt-tol", solver.kt_tol, "KT residual tolerance")->check(CLI::PositiveNumber);
    equilibrium->add_option("--max-iter", solver.max_iter, "Iteration budget");
    equilibrium->add_flag("--untied", untied, "Let z0+ and z0- differ");
    equilibrium->add_flag("--no-chartist", eq_no_chartist, "Remove the chartist");

    // replica
    auto* replica = app.add_subcommand("replica", "Evaluate a replica-symmetric branch and write it as CSV");
    std::string mode = "fixed-eps";
    double rep_eps = 0.1;
    double rep_alpha = 1.0;
    double rep_s = 1.0;
    double rep_rbar = 1.0;
    std::string tau_range = "0.2:3.0:0.05";
    replica->add_option("--mode", mode, "Branch")->check(CLI::IsMember({"fixed-eps", "fixed-alpha"}));
    replica->add_option("--eps", rep_eps, "Cost (fixed-eps)");
    replica->add_option("--alpha", rep_alpha, "Load (fixed-alpha)");
    replica->add_option("--tau", tau_range, "tau grid start:stop:step");
    replica->add_option("--scale", rep_s, "Return scale s");
    replica->add_option("--mean-return", rep_rbar, "R_bar");

    // diagnostics
    auto* diagnostics = app.add_subcommand("diagnostics", "Signal information and state-identification table");
    std::vector<std::size_t> diag_agents{8, 16, 24};
    std::vector<std::size_t> diag_states;
    std::size_t diag_instances = 1000;
    diagnostics->add_option("--n-agents", diag_agents, "List of N");
    diagnostics->add_option("--n-states", diag_states, "List of Omega (default: Omega = N)");
    diagnostics->add_option("--instances", diag_instances, "Instances per row")->check(CLI::PositiveNumber);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Disorder-averaged sweep over n or eps");
    std::string config_path;
    std::string calibration_path;
    std::string swept = "n";
    std::vector<double> values;
    double fixed = 0.1;
    std::size_t omega = 32;
    std::size_t realizations = 20;
    std::string engine_name = "equilibrium";
    bool sweep_no_chartist = false;
    unsigned threads = 1;
    sweep_cmd->add_option("--config", config_path, "Sweep config JSON");
    sweep_cmd->add_option("--calibration", calibration_path, "Calibration JSON from `calibrate` for replica overlays");
    sweep_cmd->add_option("--swept", swept, "Swept variable")->check(CLI::IsMember({"n", "eps"}));
    sweep_cmd->add_option("--values", values, "Swept values");
    sweep_cmd->add_option("--fixed", fixed, "Value of the other parameter");
    sweep_cmd->add_option("--omega", omega, "States Omega")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--realizations", realizations, "Disorder realizations");
    sweep_cmd->add_option("--engine", engine_name, "Engine")->check(CLI::IsMember({"dynamics", "equilibrium", "both"}));
    sweep_cmd->add_flag("--no-chartist", sweep_no_chartist, "Remove the chartist");
    sweep_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Select the alpha <-> n map and fit overlay constants");
    CalibrationSpec cal;
    cal.n_grid = {0.5, 1.0, 2.0, 4.0, 8.0};
    calibrate->add_option("--omega", cal.n_states, "States Omega")->check(CLI::PositiveNumber);
    calibrate->add_option("--eps", cal.eps, "Information cost (> 0)");
    calibrate->add_option("--n-grid", cal.n_grid, "Loads n");
    calibrate->add_option("--realizations", cal.realizations, "Disorder realizations");
    calibrate->add_option("--threads", cal.threads, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        err << app.help();
        return kExitValidation;
    }

    const bool json_out = global.format == "json";
    auto log = [&](const std::string& line) {
        if (!global.quiet) err << line << '\n';
    };

    try {
        if (*gen) {
            const auto instance = gen_opts.load(global);
            Sink sink(global.out_path, out);
            *sink << to_json(instance).dump(2) << '\n';
            return kExitOk;
        }

        if (*simulate) {
            const auto instance = sim_opts.load(global);
            ModelParams params = instance.params();
            params.info_cost = sim_opts.cost(instance);
            learning.chi_kind = parse_chi(chi_name);
            learning.cost_convention = parse_cost(cost_name);
            learning.seed = run_seed.value_or(dynamics_seed(params.seed));
            const auto summary = run(params, instance, learning, !sim_no_chartist);
            Sink sink(global.out_path, out);
            if (json_out) {
                EquilibriumResult view;
                view.alloc = summary.mean_alloc;
                view.objective = hamiltonian_eps(instance, summary.mean_alloc, params.info_cost);
                view.distance = distance_price_return(instance, summary.mean_alloc);
                view.kt_residual = kt_residual(instance, summary.mean_alloc, params.info_cost, {!sim_no_chartist, true});
                view.iterations = summary.steps;
                view.converged = summary.converged;
                *sink << to_json(view).dump(2) << '\n';
            } else {
                write_step_csv(*sink, summary.records);
            }
            std::ostringstream msg;
            msg << "steps=" << summary.steps << " converged=" << (summary.converged ? "yes" : "no")
                << " drift=" << format_real(summary.last_drift)
                << " H_eps=" << format_real(hamiltonian_eps(instance, summary.mean_alloc, params.info_cost))
                << " distance=" << format_real(distance_price_return(instance, summary.mean_alloc))
                << " exp_cap=" << format_real(summary.exp_cap);
            log(msg.str());
            return summary.converged ? kExitOk : kExitNonConvergence;
        }

        if (*equilibrium) {
            const auto instance = eq_opts.load(global);
            solver.method = method_name == "projected-gradient" ? SolverMethod::projected_gradient
                                                                : SolverMethod::coordinate_descent;
            solver.tie_chartist = !untied;
            solver.chartist = !eq_no_chartist;
            const auto result = solve(instance, eq_opts.cost(instance), solver);
            Sink sink(global.out_path, out);
            if (json_out) {
                *sink << to_json(result).dump(2) << '\n';
            } else {
                *sink << "objective,kt_residual,distance,iterations,converged,mean_price,z0_minus,z0_plus,zfund_mean\n"
                      << format_real(result.objective) << ',' << format_real(result.kt_residual) << ','
                      << format_real(result.distance) << ',' << result.iterations << ',' << (result.converged ? 1 : 0)
                      << ',' << format_real(result.mean_price) << ',' << format_real(result.alloc.z0[kMinus]) << ','
                      << format_real(result.alloc.z0[kPlus]) << ',' << format_real(result.alloc.mean_informed())
                      << '\n';
            }
            log("kt_residual=" + format_real(result.kt_residual) + " iterations=" + std::to_string(result.iterations)
                + " mean_price=" + format_real(result.mean_price));
            return result.converged ? kExitOk : kExitNonConvergence;
        }

        if (*replica) {
            const auto grid = parse_range(tau_range);
            const auto curve = mode == "fixed-eps" ? solve_fixed_eps(rep_eps, rep_s, rep_rbar, grid)
                                                   : solve_fixed_alpha(rep_alpha, rep_s, rep_rbar, grid);
            Sink sink(global.out_path, out);
            write_replica_csv(*sink, curve);
            std::size_t skipped = 0;
            for (const auto& p : curve) skipped += p.status != ReplicaStatus::ok;
            if (skipped > 0) log("skipped " + std::to_string(skipped) + " grid points outside the branch");
            return kExitOk;
        }

        if (*diagnostics) {
            if (diag_states.empty()) diag_states = diag_agents;
            require(diag_states.size() == diag_agents.size() || diag_states.size() == 1,
                    "--n-states must match --n-agents in length or be a single value");
            std::vector<DiagnosticsRow> rows;
            for (std::size_t k = 0; k < diag_agents.size(); ++k) {
                const std::size_t states = diag_states.size() == 1 ? diag_states[0] : diag_states[k];
                rows.push_back(diagnostics_row(diag_agents[k], states, diag_instances, global.seed.value_or(0)));
            }
            Sink sink(global.out_path, out);
            write_diagnostics_csv(*sink, rows);
            return kExitOk;
        }

        if (*sweep_cmd) {
            SweepSpec spec;
            if (!config_path.empty()) {
                spec = sweep_spec_from_json(read_json_file(config_path));
            } else {
                spec.swept = swept == "n" ? SweepVariable::n : SweepVariable::eps;
                spec.values = values;
                spec.fixed = fixed;
                spec.n_states = omega;
                spec.realizations = realizations;
                spec.engine = engine_name == "dynamics" ? Engine::dynamics
                              : engine_name == "both"   ? Engine::both
                                                        : Engine::equilibrium;
                spec.chartist = !sweep_no_chartist;
            }
            if (global.seed) spec.base_seed = *global.seed;
            if (sweep_no_chartist) spec.chartist = false;
            spec.threads = threads;
            if (!calibration_path.empty()) spec.calibration = calibration_from_json(read_json_file(calibration_path));
            const auto rows = sweep(spec);
            Sink sink(global.out_path, out);
            if (json_out) {
                *sink << to_json(rows).dump(2) << '\n';
            } else {
                if (!global.quiet) *sink << "# infoeff sweep generated " << timestamp() << '\n';
                write_sweep_csv(*sink, rows);
            }
            std::size_t failures = 0;
            std::size_t unconverged = 0;
            for (const auto& r : rows) {
                failures += r.failures;
                unconverged += r.unconverged;
                if (r.failures > 0) log("value " + format_real(r.value) + ": " + r.first_error);
            }
            return unconverged > 0 ? kExitNonConvergence : kExitOk;
        }

        if (*calibrate) {
            if (global.seed) cal.base_seed = *global.seed;
            const auto report = calibrate_alpha_map(cal);
            Sink sink(global.out_path, out);
            *sink << to_json(report).dump(2) << '\n';
            if (report.sufficient) log(std::string("selected ") + to_string(report.selected));
            else log(report.note);
            return kExitOk;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}

} // namespace infoeff
