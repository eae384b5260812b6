#pragma once

// File formats: instance / equilibrium / calibration JSON, and the CSV tables.

#include "infoeff/diagnostics.hpp"
#include "infoeff/equilibrium.hpp"
#include "infoeff/experiment.hpp"
#include "infoeff/learning.hpp"
#include "infoeff/replica.hpp"

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace infoeff {

/// {params:{N,Omega,eps,R_bar,s,seed}, returns:[...], signals:[[...]]}; reals use the
/// shortest decimal form that round-trips exactly.
[[nodiscard]] nlohmann::json to_json(const MarketInstance& instance);
[[nodiscard]] MarketInstance instance_from_json(const nlohmann::json& doc);

/// {objective, kt_residual, distance, iterations, converged, mean_price, alloc:{z:[[z-,z+],...], z0:[z0-,z0+]}}
[[nodiscard]] nlohmann::json to_json(const EquilibriumResult& result);
[[nodiscard]] Allocation allocation_from_json(const nlohmann::json& doc);

[[nodiscard]] nlohmann::json to_json(const Calibration& calibration);
[[nodiscard]] Calibration calibration_from_json(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json to_json(const CalibrationReport& report);

[[nodiscard]] nlohmann::json to_json(const std::vector<SweepRow>& rows);

/// {swept, values, fixed:{eps|n}, omega, realizations, engine, chartist, base_seed}
[[nodiscard]] SweepSpec sweep_spec_from_json(const nlohmann::json& doc);

/// Columns: t, omega, k0, price, excess, z0_plus, z0_minus, H_eps, distance.
void write_step_csv(std::ostream& out, const std::vector<StepRecord>& records);

/// Columns: tau, alpha, eps, phi, q0, w, z0_percap, H_mean, clamped. Points with a
/// non-ok status are skipped.
void write_replica_csv(std::ostream& out, const std::vector<ReplicaSolution>& curve);

/// Columns: value, engine, distance_mean, distance_se, z0pc_mean, z0pc_se, zfund_mean, zfund_se,
/// Heps_mean, Heps_se, kt_max, replica_distance, replica_z0pc.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct DiagnosticsRow {
    std::size_t n_agents = 0;
    std::size_t n_states = 0;
    double n_indist = 0.0; // mean pair count over instances
    double bound = 0.0;
    double mean_gap = 0.0;
    double mean_bits = 0.0;
};

/// Averages the diagnostics over `instances` draws seeded from base_seed.
[[nodiscard]] DiagnosticsRow diagnostics_row(std::size_t n_agents, std::size_t n_states, std::size_t instances,
                                             std::uint64_t base_seed);

/// Columns: N, Omega, n_indist, bound, mean_gap, mean_bits.
void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRow>& rows);

/// Shortest round-trip decimal form of a double.
[[nodiscard]] std::string format_real(double value);

[[nodiscard]] nlohmann::json read_json_file(const std::string& path);

} // namespace infoeff
