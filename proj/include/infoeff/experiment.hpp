#pragma once

// Disorder-averaged parameter sweeps, replica overlays and the alpha <-> n calibration.

#include "infoeff/equilibrium.hpp"
#include "infoeff/learning.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace infoeff {

enum class SweepVariable { n, eps };
enum class Engine { dynamics, equilibrium, both };
enum class AlphaMap { identity, inverse }; // alpha = n, alpha = 1/n

[[nodiscard]] double alpha_for_load(AlphaMap map, double n);

/// Frozen replica overlay: the alpha map plus one scale constant per observable.
/// The overlay distance is k_distance * sqrt(H_mean / n), the overlay z0 is k_z0 * z0_percap.
struct Calibration {
    AlphaMap map = AlphaMap::inverse;
    double k_distance = 1.0;
    double k_z0 = 1.0;
};

struct ReplicaOverlay {
    double distance = 0.0;
    double z0_percap = 0.0;
};

/// Replica prediction at load n and cost eps; empty where the branch has no solution.
[[nodiscard]] std::optional<ReplicaOverlay> replica_overlay(const Calibration& calibration, double n, double eps,
                                                            double s, double r_bar);

struct SweepSpec {
    SweepVariable swept = SweepVariable::n;
    std::vector<double> values;
    /// eps when sweeping n, n when sweeping eps.
    double fixed = 0.1;
    std::size_t n_states = 32;
    std::size_t realizations = 20;
    Engine engine = Engine::equilibrium;
    bool chartist = true;
    std::uint64_t base_seed = 0;
    double mean_return = 1.0;
    double return_scale = 1.0;
    LearningConfig learning{};
    SolverOptions solver{};
    std::optional<Calibration> calibration;
    unsigned threads = 1;

    void validate() const;
    /// (N, eps) for one swept value.
    [[nodiscard]] ModelParams params_for(double value, std::uint64_t seed) const;
};

struct Stat {
    double mean = 0.0;
    double se = 0.0;
};

struct SweepRow {
    double value = 0.0;
    Engine engine = Engine::equilibrium; // never `both`
    Stat distance;
    Stat z0_percap;
    Stat z_fund;
    Stat h_eps;
    double kt_max = 0.0;
    std::optional<double> replica_distance;
    std::optional<double> replica_z0pc;
    std::size_t failures = 0;
    std::size_t unconverged = 0;
    std::string first_error;
};

/// Per-realization observables for one engine.
struct RealizationOutcome {
    double distance = 0.0;
    double z0_percap = 0.0;
    double z_fund = 0.0;
    double h_eps = 0.0;
    double kt = 0.0;
    bool converged = true;
};

/// base_seed XOR splitmix64(splitmix64(bits(value)) + r).
[[nodiscard]] std::uint64_t realization_seed(std::uint64_t base_seed, double value, std::uint64_t realization);

/// Seed of the learning stream for a realization (distinct from the instance seed).
[[nodiscard]] std::uint64_t dynamics_seed(std::uint64_t instance_seed);

/// One engine on one realization.
[[nodiscard]] RealizationOutcome run_realization(const SweepSpec& spec, double value, std::uint64_t realization,
                                                 Engine engine);

/// Rows in value order; with Engine::both each value gets a dynamics row then an equilibrium row.
[[nodiscard]] std::vector<SweepRow> sweep(const SweepSpec& spec);

/// Mean and standard error (sample sd / sqrt(count)); se = 0 for fewer than two samples.
[[nodiscard]] Stat mean_se(const std::vector<double>& samples);

struct CandidateFit {
    AlphaMap map = AlphaMap::inverse;
    double k_distance = 0.0;
    double k_z0 = 0.0;
    /// Sum over grid points and both observables of the squared relative deviation.
    double ssd = 0.0;
    /// Replica distance moves in the same direction as the simulated one between every adjacent pair.
    bool monotone_consistent = false;
    std::vector<double> replica_distance;
    std::vector<double> replica_z0pc;
};

struct CalibrationReport {
    bool sufficient = false;
    std::string note;
    std::vector<double> n_grid;
    std::vector<SweepRow> rows; // equilibrium sweep used for the fit
    std::vector<CandidateFit> candidates;
    AlphaMap selected = AlphaMap::inverse;
    Calibration calibration;
};

struct CalibrationSpec {
    std::size_t n_states = 32;
    double eps = 0.1;
    std::vector<double> n_grid;
    std::size_t realizations = 20;
    std::uint64_t base_seed = 0;
    double mean_return = 1.0;
    double return_scale = 1.0;
    unsigned threads = 1;
};

/// Equilibrium sweep over n, then the better of alpha = n and alpha = 1/n with fitted constants.
[[nodiscard]] CalibrationReport calibrate_alpha_map(const CalibrationSpec& spec);

/// Fits both candidate maps against an existing equilibrium sweep.
[[nodiscard]] CalibrationReport fit_alpha_map(const CalibrationSpec& spec, std::vector<SweepRow> rows);

/// Grid points on the inefficient side of the zero-cost transition (alpha(n) > 1).
[[nodiscard]] bool inefficient_phase(AlphaMap map, double n);

[[nodiscard]] const char* to_string(Engine engine);
[[nodiscard]] const char* to_string(AlphaMap map);
[[nodiscard]] const char* to_string(SweepVariable variable);

} // namespace infoeff
