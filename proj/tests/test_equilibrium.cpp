#include "infoeff/equilibrium.hpp"
#include "infoeff/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace infoeff;

namespace {

ModelParams params(std::size_t n, std::size_t omega, std::uint64_t seed, double eps = 0.0)
{
    ModelParams p;
    p.n_agents = n;
    p.n_states = omega;
    p.seed = seed;
    p.info_cost = eps;
    return p;
}

double mean_return(const MarketInstance& inst)
{
    double m = 0.0;
    for (double r : inst.returns()) m += r;
    return m / static_cast<double>(inst.n_states());
}

} // namespace

TEST_CASE("chartist alone fits the mean return")
{
    const auto inst = sample_instance(params(6, 10, 3));
    SolverOptions opts;
    opts.informed = false;
    const auto res = solve(inst, 0.0, opts);
    REQUIRE(res.converged);
    const double m = mean_return(inst);
    CHECK(res.alloc.z0[kMinus] / 6.0 == doctest::Approx(m).epsilon(1e-12));
    CHECK(res.alloc.z0[kPlus] / 6.0 == doctest::Approx(m).epsilon(1e-12));
    double ss = 0.0;
    for (double r : inst.returns()) ss += (r - m) * (r - m);
    CHECK(res.objective == doctest::Approx(0.5 * ss).epsilon(1e-12));
    CHECK(res.alloc.total_informed() == 0.0);
    CHECK(kt_residual(inst, res.alloc, 0.0, {true, false}) <= 1e-12);
}

TEST_CASE("prohibitive cost shuts out every informed trader")
{
    const auto inst = sample_instance(params(12, 8, 4));
    for (auto method : {SolverMethod::coordinate_descent, SolverMethod::projected_gradient}) {
        SolverOptions opts;
        opts.method = method;
        const auto res = solve(inst, 1e3, opts);
        REQUIRE(res.converged);
        CHECK(res.alloc.total_informed() == 0.0);
        CHECK(res.alloc.z0[kPlus] / 12.0 == doctest::Approx(mean_return(inst)).epsilon(1e-8));
    }
    CHECK(kt_residual(inst, Allocation(12), 1e3, {false, true}) == 0.0);
}

TEST_CASE("coordinate descent matches a multi-start projected-gradient oracle")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto inst = sample_instance(params(4, 8, 700 + seed));
        const auto cd = solve(inst, 0.1);
        REQUIRE(cd.converged);
        double best = std::numeric_limits<double>::infinity();
        for (std::uint64_t start = 0; start < 5; ++start) {
            SolverOptions opts;
            opts.method = SolverMethod::projected_gradient;
            opts.kt_tol = 1e-11;
            opts.init_seed = 1000 * seed + start;
            const auto pg = solve(inst, 0.1, opts);
            REQUIRE(pg.converged);
            best = std::min(best, pg.objective);
        }
        CHECK(std::abs(cd.objective - best) <= 1e-8 * std::abs(best));
        CHECK(cd.objective == doctest::Approx(oracle::objective(inst, cd.alloc, 0.1)).epsilon(1e-12));
    }
}

TEST_CASE("sweeps never increase the objective and iterates stay feasible")
{
    const auto inst = sample_instance(params(32, 16, 5));
    SolverOptions opts;
    opts.trace = true;
    opts.init_seed = 77;
    const auto res = solve(inst, 0.1, opts);
    REQUIRE(res.converged);
    REQUIRE(res.trace.size() >= 2);
    for (std::size_t k = 1; k < res.trace.size(); ++k)
        CHECK(res.trace[k] <= res.trace[k - 1] + 1e-14 * std::abs(res.trace[k - 1]));
    CHECK(res.alloc.nonnegative());
    CHECK(res.kt_residual <= opts.kt_tol);
}

TEST_CASE("objective is unique across random starts")
{
    for (double eps : {0.1, 0.0, -0.05}) {
        const auto inst = sample_instance(params(24, 16, 9));
        std::vector<double> values;
        for (std::uint64_t start = 1; start <= 4; ++start) {
            SolverOptions opts;
            opts.init_seed = start;
            opts.kt_tol = 1e-10;
            const auto res = solve(inst, eps, opts);
            REQUIRE(res.converged);
            values.push_back(res.objective);
        }
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        CHECK(*hi - *lo <= 1e-9 * std::max(1.0, std::abs(*lo)));
    }
}

TEST_CASE("KT residual reacts to a perturbation at the curvature scale")
{
    const auto inst = sample_instance(params(16, 16, 10));
    const auto res = solve(inst, 0.1);
    REQUIRE(res.converged);
    std::size_t agent = 0;
    SignalIndex m = kMinus;
    bool found = false;
    for (std::size_t i = 0; i < 16 && !found; ++i)
        for (SignalIndex k : {kMinus, kPlus})
            if (res.alloc.z[i][k] > 1e-3 && !found) {
                agent = i;
                m = k;
                found = true;
            }
    REQUIRE(found);
    auto bumped = res.alloc;
    bumped.z[agent][m] += 1e-3;
    const double curvature = static_cast<double>(inst.signal_count(agent, m)) / (16.0 * 16.0);
    CHECK(kt_residual(inst, bumped, 0.1) == doctest::Approx(curvature * 1e-3).epsilon(1e-3));
}

TEST_CASE("zero cost above the transition clears at the returns")
{
    const auto inst = sample_instance(params(128, 16, 11));
    SolverOptions opts;
    opts.chartist = false;
    const auto res = solve(inst, 0.0, opts);
    double sq = 0.0;
    for (double r : inst.returns()) sq += r * r;
    CHECK(res.converged);
    CHECK(res.objective <= 1e-10 * sq);
    CHECK(res.alloc.z0[kMinus] == 0.0);
    CHECK(res.mean_price == doctest::Approx(mean_return(inst)).epsilon(1e-5));
}

TEST_CASE("untied chartist components equalize")
{
    const auto inst = sample_instance(params(16, 8, 12));
    SolverOptions opts;
    opts.tie_chartist = false;
    opts.method = SolverMethod::projected_gradient;
    opts.init_seed = 3;
    const auto untied = solve(inst, 0.1, opts);
    REQUIRE(untied.converged);
    CHECK(untied.alloc.z0[kMinus] == doctest::Approx(untied.alloc.z0[kPlus]).epsilon(1e-6));
    const auto tied = solve(inst, 0.1);
    CHECK(untied.objective == doctest::Approx(tied.objective).epsilon(1e-9));
}

TEST_CASE("iteration budget exhaustion is reported")
{
    const auto inst = sample_instance(params(64, 16, 13));
    SolverOptions opts;
    opts.max_iter = 2;
    opts.init_seed = 1;
    const auto res = solve(inst, 0.1, opts);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 2);
    CHECK(res.kt_residual > opts.kt_tol);
    CHECK(res.alloc.nonnegative());
}

TEST_CASE("solver options are validated")
{
    const auto inst = sample_instance(params(4, 4, 1));
    SolverOptions opts;
    opts.kt_tol = 0.0;
    CHECK_THROWS_AS((void)solve(inst, 0.1, opts), ValidationError);
}

TEST_CASE("dynamics and solver agree in the chartist-only limit")
{
    const auto p = params(32, 16, 14, 1e3);
    const auto inst = sample_instance(p);
    const auto eq = solve(inst, p.info_cost);
    LearningConfig c;
    c.seed = 2;
    const auto run_summary = run(p, inst, c);
    const auto report = stationarity_crosscheck(inst, p.info_cost, eq, run_summary);
    CHECK(report.h_rel_gap <= 1e-3);
}

TEST_CASE("dynamics and solver agree well below the transition at zero cost")
{
    const auto p = params(8, 32, 15, 0.0);
    const auto inst = sample_instance(p);
    const auto eq = solve(inst, 0.0);
    REQUIRE(eq.converged);
    LearningConfig c;
    c.seed = 5;
    const auto run_summary = run(p, inst, c);
    const auto report = stationarity_crosscheck(inst, 0.0, eq, run_summary);
    CHECK(report.distance_rel_gap <= 0.05);
}
