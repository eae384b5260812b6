#include "infoeff/io.hpp"

#include "infoeff/errors.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace infoeff {

using nlohmann::json;

std::string format_real(double value)
{
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

json to_json(const MarketInstance& instance)
{
    const auto& p = instance.params();
    json doc;
    doc["params"] = {{"N", p.n_agents},          {"Omega", p.n_states}, {"eps", p.info_cost},
                     {"R_bar", p.mean_return}, {"s", p.return_scale}, {"seed", p.seed}};
    doc["returns"] = std::vector<double>(instance.returns().begin(), instance.returns().end());
    json signals = json::array();
    for (std::size_t i = 0; i < instance.n_agents(); ++i) {
        const auto row = instance.agent_signals(i);
        signals.push_back(std::vector<int>(row.begin(), row.end()));
    }
    doc["signals"] = std::move(signals);
    return doc;
}

MarketInstance instance_from_json(const json& doc)
{
    try {
        const auto& p = doc.at("params");
        ModelParams params;
        params.n_agents = p.at("N").get<std::size_t>();
        params.n_states = p.at("Omega").get<std::size_t>();
        params.info_cost = p.at("eps").get<double>();
        params.mean_return = p.at("R_bar").get<double>();
        params.return_scale = p.at("s").get<double>();
        params.seed = p.at("seed").get<std::uint64_t>();

        auto returns = doc.at("returns").get<std::vector<double>>();
        std::vector<std::int8_t> signals;
        const auto& rows = doc.at("signals");
        require(rows.size() == params.n_agents, "signals must have N rows");
        for (const auto& row : rows) {
            const auto values = row.get<std::vector<int>>();
            require(values.size() == params.n_states, "each signal row must have Omega entries");
            for (int k : values) signals.push_back(static_cast<std::int8_t>(k));
        }
        return MarketInstance(params, std::move(returns), std::move(signals));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed instance JSON: ") + e.what());
    }
}

json to_json(const EquilibriumResult& result)
{
    json z = json::array();
    for (const auto& zi : result.alloc.z) z.push_back({zi[kMinus], zi[kPlus]});
    return json{{"objective", result.objective},
                {"kt_residual", result.kt_residual},
                {"distance", result.distance},
                {"iterations", result.iterations},
                {"converged", result.converged},
                {"mean_price", result.mean_price},
                {"alloc", {{"z", std::move(z)}, {"z0", {result.alloc.z0[kMinus], result.alloc.z0[kPlus]}}}}};
}

Allocation allocation_from_json(const json& doc)
{
    try {
        const auto& z = doc.at("z");
        Allocation alloc(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            alloc.z[i][kMinus] = z[i].at(0).get<double>();
            alloc.z[i][kPlus] = z[i].at(1).get<double>();
        }
        alloc.z0 = {doc.at("z0").at(0).get<double>(), doc.at("z0").at(1).get<double>()};
        return alloc;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed allocation JSON: ") + e.what());
    }
}

json to_json(const Calibration& calibration)
{
    return json{{"map", to_string(calibration.map)},
                {"k_distance", calibration.k_distance},
                {"k_z0", calibration.k_z0}};
}

Calibration calibration_from_json(const json& doc)
{
    try {
        Calibration c;
        const auto map = doc.at("map").get<std::string>();
        require(map == "alpha=n" || map == "alpha=1/n", "calibration map must be alpha=n or alpha=1/n");
        c.map = map == "alpha=n" ? AlphaMap::identity : AlphaMap::inverse;
        c.k_distance = doc.at("k_distance").get<double>();
        c.k_z0 = doc.at("k_z0").get<double>();
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed calibration JSON: ") + e.what());
    }
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

json to_json(const std::vector<SweepRow>& rows)
{
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"value", r.value},
                       {"engine", to_string(r.engine)},
                       {"distance_mean", finite_or_null(r.distance.mean)},
                       {"distance_se", finite_or_null(r.distance.se)},
                       {"z0pc_mean", finite_or_null(r.z0_percap.mean)},
                       {"z0pc_se", finite_or_null(r.z0_percap.se)},
                       {"zfund_mean", finite_or_null(r.z_fund.mean)},
                       {"zfund_se", finite_or_null(r.z_fund.se)},
                       {"Heps_mean", finite_or_null(r.h_eps.mean)},
                       {"Heps_se", finite_or_null(r.h_eps.se)},
                       {"kt_max", r.kt_max},
                       {"replica_distance", optional_number(r.replica_distance)},
                       {"replica_z0pc", optional_number(r.replica_z0pc)},
                       {"failures", r.failures},
                       {"unconverged", r.unconverged},
                       {"first_error", r.first_error}});
    }
    return out;
}

json to_json(const CalibrationReport& report)
{
    json candidates = json::array();
    for (const auto& c : report.candidates) {
        json rd = json::array();
        json rz = json::array();
        for (double v : c.replica_distance) rd.push_back(finite_or_null(v));
        for (double v : c.replica_z0pc) rz.push_back(finite_or_null(v));
        candidates.push_back({{"map", to_string(c.map)},
                              {"k_distance", c.k_distance},
                              {"k_z0", c.k_z0},
                              {"ssd", c.ssd},
                              {"monotone_consistent", c.monotone_consistent},
                              {"replica_distance", std::move(rd)},
                              {"replica_z0pc", std::move(rz)}});
    }
    json doc{{"sufficient", report.sufficient},
             {"note", report.note},
             {"n_grid", report.n_grid},
             {"rows", to_json(report.rows)},
             {"candidates", std::move(candidates)}};
    if (report.sufficient) {
        doc["selected"] = to_string(report.selected);
        doc["calibration"] = to_json(report.calibration);
    }
    return doc;
}

SweepSpec sweep_spec_from_json(const json& doc)
{
    try {
        SweepSpec spec;
        const auto swept = doc.at("swept").get<std::string>();
        require(swept == "n" || swept == "eps", "swept must be \"n\" or \"eps\"");
        spec.swept = swept == "n" ? SweepVariable::n : SweepVariable::eps;
        spec.values = doc.at("values").get<std::vector<double>>();
        const auto& fixed = doc.at("fixed");
        spec.fixed = spec.swept == SweepVariable::n ? fixed.at("eps").get<double>() : fixed.at("n").get<double>();
        spec.n_states = doc.value("omega", spec.n_states);
        spec.realizations = doc.value("realizations", spec.realizations);
        const auto engine = doc.value("engine", std::string("equilibrium"));
        require(engine == "dynamics" || engine == "equilibrium" || engine == "both",
                "engine must be dynamics, equilibrium or both");
        spec.engine = engine == "dynamics" ? Engine::dynamics : engine == "both" ? Engine::both : Engine::equilibrium;
        spec.chartist = doc.value("chartist", true);
        spec.base_seed = doc.value("base_seed", std::uint64_t{0});
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed sweep config: ") + e.what());
    }
}

void write_step_csv(std::ostream& out, const std::vector<StepRecord>& records)
{
    out << "t,omega,k0,price,excess,z0_plus,z0_minus,H_eps,distance\n";
    for (const auto& r : records) {
        out << r.t << ',' << r.omega << ',' << static_cast<int>(r.k0) << ',' << format_real(r.price) << ','
            << format_real(r.excess) << ',' << format_real(r.z0_plus) << ',' << format_real(r.z0_minus) << ','
            << format_real(r.h_eps) << ',' << format_real(r.distance) << '\n';
    }
}

void write_replica_csv(std::ostream& out, const std::vector<ReplicaSolution>& curve)
{
    out << "tau,alpha,eps,phi,q0,w,z0_percap,H_mean,clamped\n";
    for (const auto& s : curve) {
        if (s.status != ReplicaStatus::ok) continue;
        out << format_real(s.tau) << ',' << format_real(s.alpha) << ',' << format_real(s.eps) << ','
            << format_real(s.phi) << ',' << format_real(s.q0) << ',' << format_real(s.w) << ','
            << format_real(s.z0_percap) << ',' << format_real(s.h_mean) << ',' << (s.clamped ? 1 : 0) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << "value,engine,distance_mean,distance_se,z0pc_mean,z0pc_se,zfund_mean,zfund_se,Heps_mean,Heps_se,kt_max,"
           "replica_distance,replica_z0pc\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
    for (const auto& r : rows) {
        out << format_real(r.value) << ',' << to_string(r.engine) << ',' << format_real(r.distance.mean) << ','
            << format_real(r.distance.se) << ',' << format_real(r.z0_percap.mean) << ','
            << format_real(r.z0_percap.se) << ',' << format_real(r.z_fund.mean) << ',' << format_real(r.z_fund.se)
            << ',' << format_real(r.h_eps.mean) << ',' << format_real(r.h_eps.se) << ',' << format_real(r.kt_max)
            << ',' << opt(r.replica_distance) << ',' << opt(r.replica_z0pc) << '\n';
    }
}

DiagnosticsRow diagnostics_row(std::size_t n_agents, std::size_t n_states, std::size_t instances,
                               std::uint64_t base_seed)
{
    require(instances >= 1, "instances must be >= 1");
    DiagnosticsRow row;
    row.n_agents = n_agents;
    row.n_states = n_states;
    row.bound = indistinguishable_bound(n_agents, n_states);

    double pairs = 0.0;
    double gap_sum = 0.0;
    std::size_t gap_count = 0;
    double bits_sum = 0.0;
    const double key = static_cast<double>(n_agents) * 65536.0 + static_cast<double>(n_states);
    for (std::size_t k = 0; k < instances; ++k) {
        ModelParams params;
        params.n_agents = n_agents;
        params.n_states = n_states;
        params.seed = realization_seed(base_seed, key, k);
        const auto instance = sample_instance(params);
        pairs += static_cast<double>(count_indistinguishable_pairs(instance));
        for (std::size_t i = 0; i < n_agents; ++i) {
            if (auto gap = conditional_mean_gap(instance, i)) {
                gap_sum += *gap;
                ++gap_count;
            }
            bits_sum += signal_information(instance, i);
        }
    }
    row.n_indist = pairs / static_cast<double>(instances);
    row.mean_gap = gap_count > 0 ? gap_sum / static_cast<double>(gap_count) : std::nan("");
    row.mean_bits = bits_sum / static_cast<double>(instances * n_agents);
    return row;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRow>& rows)
{
    out << "N,Omega,n_indist,bound,mean_gap,mean_bits\n";
    for (const auto& r : rows) {
        out << r.n_agents << ',' << r.n_states << ',' << format_real(r.n_indist) << ',' << format_real(r.bound) << ','
            << format_real(r.mean_gap) << ',' << format_real(r.mean_bits) << '\n';
    }
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("invalid JSON in " + path + ": " + e.what());
    }
}

} // namespace infoeff
