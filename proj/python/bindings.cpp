#include "infoeff/cli.hpp"
#include "infoeff/diagnostics.hpp"
#include "infoeff/equilibrium.hpp"
#include "infoeff/errors.hpp"
#include "infoeff/experiment.hpp"
#include "infoeff/io.hpp"
#include "infoeff/learning.hpp"
#include "infoeff/model.hpp"
#include "infoeff/replica.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace py = pybind11;
using namespace infoeff;

namespace {

std::vector<std::vector<int>> signal_rows(const MarketInstance& inst)
{
    std::vector<std::vector<int>> rows(inst.n_agents());
    for (std::size_t i = 0; i < inst.n_agents(); ++i)
        for (std::int8_t k : inst.agent_signals(i)) rows[i].push_back(k);
    return rows;
}

MarketInstance make_instance(const ModelParams& params, std::vector<double> returns,
                             const std::vector<std::vector<int>>& signals)
{
    std::vector<std::int8_t> flat;
    for (const auto& row : signals) {
        if (row.size() != params.n_states) throw ValidationError("every signal row needs n_states entries");
        for (int k : row) flat.push_back(static_cast<std::int8_t>(k));
    }
    return MarketInstance(params, std::move(returns), std::move(flat));
}

std::vector<std::vector<double>> pairs(const std::vector<std::array<double, 2>>& z)
{
    std::vector<std::vector<double>> out;
    for (const auto& p : z) out.push_back({p[kMinus], p[kPlus]});
    return out;
}

std::tuple<int, std::string, std::string> cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "infoeff");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

} // namespace

PYBIND11_MODULE(infoeff, m)
{
    m.doc() = "Information efficiency of a single-asset market with costly private signals";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);

    m.attr("MINUS") = kMinus;
    m.attr("PLUS") = kPlus;

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init<>())
        .def(py::init([](std::size_t n, std::size_t omega, double eps, double r_bar, double s, std::uint64_t seed) {
                 ModelParams p{n, omega, eps, r_bar, s, seed};
                 p.validate();
                 return p;
             }),
             py::arg("n_agents"), py::arg("n_states"), py::arg("info_cost") = 0.0, py::arg("mean_return") = 1.0,
             py::arg("return_scale") = 1.0, py::arg("seed") = 0)
        .def_readwrite("n_agents", &ModelParams::n_agents)
        .def_readwrite("n_states", &ModelParams::n_states)
        .def_readwrite("info_cost", &ModelParams::info_cost)
        .def_readwrite("mean_return", &ModelParams::mean_return)
        .def_readwrite("return_scale", &ModelParams::return_scale)
        .def_readwrite("seed", &ModelParams::seed)
        .def_property_readonly("load", &ModelParams::load)
        .def("validate", &ModelParams::validate);

    py::class_<MarketInstance>(m, "MarketInstance")
        .def(py::init(&make_instance), py::arg("params"), py::arg("returns"), py::arg("signals"))
        .def_property_readonly("params", &MarketInstance::params)
        .def_property_readonly("n_agents", &MarketInstance::n_agents)
        .def_property_readonly("n_states", &MarketInstance::n_states)
        .def_property_readonly("returns",
                               [](const MarketInstance& i) { return std::vector<double>(i.returns().begin(), i.returns().end()); })
        .def_property_readonly("signals", &signal_rows)
        .def("signal_count", &MarketInstance::signal_count, py::arg("agent"), py::arg("m"))
        .def("to_json", [](const MarketInstance& i) { return to_json(i).dump(); })
        .def_static("from_json", [](const std::string& text) { return instance_from_json(nlohmann::json::parse(text)); })
        .def(py::self == py::self);

    py::class_<Allocation>(m, "Allocation")
        .def(py::init<std::size_t, double, double>(), py::arg("n_agents"), py::arg("informed") = 0.0,
             py::arg("chartist") = 0.0)
        .def_property(
            "z", [](const Allocation& a) { return pairs(a.z); },
            [](Allocation& a, const std::vector<std::array<double, 2>>& z) { a.z = z; })
        .def_readwrite("z0", &Allocation::z0)
        .def_property_readonly("n_agents", &Allocation::n_agents)
        .def("mean_informed", &Allocation::mean_informed)
        .def("total_informed", &Allocation::total_informed);

    m.def("sample_instance", &sample_instance, py::arg("params"));
    m.def(
        "clearing_prices", [](const MarketInstance& i, const Allocation& a) { return pairs(clearing_prices(i, a).p); },
        py::arg("instance"), py::arg("alloc"), "Prices indexed [state][k0] with k0 = MINUS, PLUS.");
    m.def("payoff", &payoff, py::arg("instance"), py::arg("alloc"), py::arg("trader"));
    m.def("squared_distance", &squared_distance, py::arg("instance"), py::arg("alloc"));
    m.def("distance_price_return", &distance_price_return, py::arg("instance"), py::arg("alloc"));
    m.def("hamiltonian_eps", &hamiltonian_eps, py::arg("instance"), py::arg("alloc"), py::arg("eps"));
    m.def(
        "hamiltonian_gradient",
        [](const MarketInstance& i, const Allocation& a, double eps) {
            const auto g = hamiltonian_gradient(i, a, eps);
            return py::make_tuple(pairs(g.z), g.z0);
        },
        py::arg("instance"), py::arg("alloc"), py::arg("eps"), "Returns (dz, dz0).");

    py::enum_<SolverMethod>(m, "SolverMethod")
        .value("coordinate_descent", SolverMethod::coordinate_descent)
        .value("projected_gradient", SolverMethod::projected_gradient);

    py::class_<SolverOptions>(m, "SolverOptions")
        .def(py::init<>())
        .def_readwrite("method", &SolverOptions::method)
        .def_readwrite("tie_chartist", &SolverOptions::tie_chartist)
        .def_readwrite("chartist", &SolverOptions::chartist)
        .def_readwrite("informed", &SolverOptions::informed)
        .def_readwrite("max_iter", &SolverOptions::max_iter)
        .def_readwrite("kt_tol", &SolverOptions::kt_tol)
        .def_readwrite("init_seed", &SolverOptions::init_seed)
        .def_readwrite("trace", &SolverOptions::trace);

    py::class_<EquilibriumResult>(m, "EquilibriumResult")
        .def_readonly("alloc", &EquilibriumResult::alloc)
        .def_readonly("objective", &EquilibriumResult::objective)
        .def_readonly("kt_residual", &EquilibriumResult::kt_residual)
        .def_readonly("iterations", &EquilibriumResult::iterations)
        .def_readonly("distance", &EquilibriumResult::distance)
        .def_readonly("converged", &EquilibriumResult::converged)
        .def_readonly("mean_price", &EquilibriumResult::mean_price)
        .def_readonly("trace", &EquilibriumResult::trace);

    m.def("solve", &solve, py::arg("instance"), py::arg("eps"), py::arg("options") = SolverOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "kt_residual", [](const MarketInstance& i, const Allocation& a, double eps) { return kt_residual(i, a, eps); },
        py::arg("instance"), py::arg("alloc"), py::arg("eps"));

    py::enum_<ChiKind>(m, "ChiKind")
        .value("exponential", ChiKind::exponential)
        .value("rectified_linear", ChiKind::rectified_linear);
    py::enum_<CostConvention>(m, "CostConvention")
        .value("paper_literal", CostConvention::paper_literal)
        .value("objective_matched", CostConvention::objective_matched);

    py::class_<LearningConfig>(m, "LearningConfig")
        .def(py::init<>())
        .def_readwrite("chi_kind", &LearningConfig::chi_kind)
        .def_readwrite("gain", &LearningConfig::gain)
        .def_readwrite("cost_convention", &LearningConfig::cost_convention)
        .def_readwrite("t_max", &LearningConfig::t_max)
        .def_readwrite("transient", &LearningConfig::transient)
        .def_readwrite("avg_window", &LearningConfig::avg_window)
        .def_readwrite("tol", &LearningConfig::tol)
        .def_readwrite("seed", &LearningConfig::seed)
        .def_readwrite("record_stride", &LearningConfig::record_stride)
        .def_readwrite("stop_on_convergence", &LearningConfig::stop_on_convergence);

    py::class_<RunSummary>(m, "RunSummary")
        .def_readonly("mean_alloc", &RunSummary::mean_alloc)
        .def_readonly("distance_series", &RunSummary::distance_series)
        .def_readonly("h_series", &RunSummary::h_series)
        .def_readonly("z0_percap_series", &RunSummary::z0_percap_series)
        .def_readonly("converged", &RunSummary::converged)
        .def_readonly("steps", &RunSummary::steps);

    m.def("run", &run, py::arg("params"), py::arg("instance"), py::arg("config") = LearningConfig{},
          py::arg("chartist") = true, py::call_guard<py::gil_scoped_release>());
    m.def("chi", &chi, py::arg("u"), py::arg("config") = LearningConfig{});

    m.def("psi_r", &psi_r, py::arg("tau"));
    m.def("psi_q", &psi_q, py::arg("tau"));
    m.def("psi_phi", &psi_phi, py::arg("tau"));
    m.def("phi_plus", &phi_plus, py::arg("tau"), py::arg("eps"), py::arg("s") = 1.0);

    py::enum_<ReplicaStatus>(m, "ReplicaStatus")
        .value("ok", ReplicaStatus::ok)
        .value("transition", ReplicaStatus::transition)
        .value("rejected", ReplicaStatus::rejected);

    py::class_<ReplicaSolution>(m, "ReplicaSolution")
        .def_readonly("tau", &ReplicaSolution::tau)
        .def_readonly("alpha", &ReplicaSolution::alpha)
        .def_readonly("eps", &ReplicaSolution::eps)
        .def_readonly("phi", &ReplicaSolution::phi)
        .def_readonly("q0", &ReplicaSolution::q0)
        .def_readonly("q_hat0", &ReplicaSolution::q_hat0)
        .def_readonly("w", &ReplicaSolution::w)
        .def_readonly("z0_percap", &ReplicaSolution::z0_percap)
        .def_readonly("h_mean", &ReplicaSolution::h_mean)
        .def_readonly("clamped", &ReplicaSolution::clamped)
        .def_readonly("status", &ReplicaSolution::status)
        .def_readonly("note", &ReplicaSolution::note)
        .def("max_residual", [](const ReplicaSolution& sol, double s, double r_bar) {
            return saddle_residuals(sol, s, r_bar).max_core();
        }, py::arg("s") = 1.0, py::arg("r_bar") = 1.0);

    m.def("solve_fixed_eps", &solve_fixed_eps_point, py::arg("eps"), py::arg("tau"), py::arg("s") = 1.0,
          py::arg("r_bar") = 1.0);
    m.def("solve_fixed_alpha", &solve_fixed_alpha_point, py::arg("alpha"), py::arg("tau"), py::arg("s") = 1.0,
          py::arg("r_bar") = 1.0);
    m.def("tau_for_alpha", &tau_for_alpha, py::arg("alpha"), py::arg("eps"), py::arg("s") = 1.0);
    m.def("tau_for_eps", &tau_for_eps, py::arg("eps"), py::arg("alpha"), py::arg("s") = 1.0);

    m.def("count_indistinguishable_pairs", &count_indistinguishable_pairs, py::arg("instance"));
    m.def("indistinguishable_bound", &indistinguishable_bound, py::arg("n_agents"), py::arg("n_states"));
    m.def("conditional_mean_gap", &conditional_mean_gap, py::arg("instance"), py::arg("agent"));
    m.def("signal_information", &signal_information, py::arg("instance"), py::arg("agent"));

    m.def("realization_seed", &realization_seed, py::arg("base_seed"), py::arg("value"), py::arg("realization"));
    m.def(
        "sweep",
        [](const std::string& config, unsigned threads) {
            auto spec = sweep_spec_from_json(nlohmann::json::parse(config));
            spec.threads = threads;
            std::vector<SweepRow> rows;
            {
                py::gil_scoped_release release;
                rows = sweep(spec);
            }
            return to_json(rows).dump();
        },
        py::arg("config"), py::arg("threads") = 1, "Runs a sweep from a JSON config string; returns the rows as JSON.");
    m.def("cli", &cli, py::arg("args"), "Runs the command-line front end; returns (exit_code, stdout, stderr).");
}
