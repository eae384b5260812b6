#include "infoeff/diagnostics.hpp"
#include "infoeff/errors.hpp"
#include "infoeff/io.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace infoeff;

namespace {

ModelParams params(std::size_t n, std::size_t omega, std::uint64_t seed)
{
    ModelParams p;
    p.n_agents = n;
    p.n_states = omega;
    p.seed = seed;
    return p;
}

std::uint64_t brute_force_pairs(const MarketInstance& inst)
{
    std::uint64_t pairs = 0;
    for (std::size_t a = 0; a < inst.n_states(); ++a)
        for (std::size_t b = a + 1; b < inst.n_states(); ++b) {
            bool same = true;
            for (std::size_t i = 0; i < inst.n_agents(); ++i) same = same && inst.signal(i, a) == inst.signal(i, b);
            pairs += same;
        }
    return pairs;
}

} // namespace

TEST_CASE("indistinguishable pairs")
{
    CHECK(count_indistinguishable_pairs(oracle::make_instance(1, 2, {1.0, 1.0}, {1, 1})) == 1);
    CHECK(count_indistinguishable_pairs(oracle::make_instance(1, 2, {1.0, 1.0}, {1, -1})) == 0);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto inst = sample_instance(params(3, 8, seed));
        CHECK(count_indistinguishable_pairs(inst) == brute_force_pairs(inst));
        CHECK(signals_identify_state(inst) == (brute_force_pairs(inst) == 0));
    }
}

TEST_CASE("zero pairs means the signal vector identifies the state")
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto inst = sample_instance(params(6, 8, 1000 + seed));
        if (count_indistinguishable_pairs(inst) != 0) continue;
        for (std::size_t a = 0; a < 8; ++a)
            for (std::size_t b = a + 1; b < 8; ++b) {
                bool differ = false;
                for (std::size_t i = 0; i < 6; ++i) differ = differ || inst.signal(i, a) != inst.signal(i, b);
                CHECK(differ);
            }
    }
}

TEST_CASE("expected pair count")
{
    CHECK(indistinguishable_bound(2, 4) == 1.5);
    CHECK(indistinguishable_bound(5, 1) == 0.0);
    CHECK(indistinguishable_bound(3, 2) == 2.0 / 16.0);
    CHECK_THROWS_AS((void)indistinguishable_bound(0, 3), ValidationError);

    const std::size_t draws = 10'000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::uint64_t seed = 0; seed < draws; ++seed) {
        const double c = static_cast<double>(count_indistinguishable_pairs(sample_instance(params(2, 4, seed))));
        sum += c;
        sum_sq += c * c;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / (draws - 1));
    CHECK(std::abs(mean - 1.5) <= 3.0 * se);
}

TEST_CASE("probability of any indistinguishable pair stays under the bound")
{
    const std::size_t draws = 10'000;
    double previous = 1.0;
    for (std::size_t n : {8, 16, 24}) {
        std::size_t hits = 0;
        for (std::uint64_t seed = 0; seed < draws; ++seed)
            hits += count_indistinguishable_pairs(sample_instance(params(n, n, 50'000 * n + seed))) > 0;
        const double frac = static_cast<double>(hits) / draws;
        const double se = std::sqrt(std::max(frac * (1.0 - frac), 1.0 / draws) / draws);
        CHECK(frac - 3.0 * se <= indistinguishable_bound(n, n));
        CHECK(frac <= previous);
        previous = frac;
    }
    CHECK(previous < 1e-3);
}

TEST_CASE("conditional mean gap")
{
    CHECK(*conditional_mean_gap(oracle::make_instance(1, 2, {1.2, 0.8}, {1, -1}), 0) == doctest::Approx(0.4));
    CHECK_FALSE(conditional_mean_gap(oracle::make_instance(1, 2, {1.2, 0.8}, {1, 1}), 0).has_value());

    auto p = params(4, 10, 3);
    p.return_scale = 1e-300;
    const auto flat = sample_instance(p);
    for (std::size_t i = 0; i < 4; ++i)
        if (auto gap = conditional_mean_gap(flat, i)) CHECK(*gap == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("conditional mean gap shrinks like 1/N when Omega = N")
{
    std::vector<double> log_n;
    std::vector<double> log_gap;
    std::vector<double> scaled;
    for (std::size_t n : {16, 32, 64, 128}) {
        double ss = 0.0;
        std::size_t count = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const auto inst = sample_instance(params(n, n, 7'000'000 + 1000 * n + seed));
            for (std::size_t i = 0; i < n; ++i)
                if (auto gap = conditional_mean_gap(inst, i)) {
                    ss += *gap * *gap;
                    ++count;
                }
        }
        const double rms = std::sqrt(ss / static_cast<double>(count));
        log_n.push_back(std::log(static_cast<double>(n)));
        log_gap.push_back(std::log(rms));
        scaled.push_back(rms * static_cast<double>(n));
    }
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    CHECK(*hi / *lo <= 2.0);
    // Least-squares slope of log(gap) against log(N).
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < log_n.size(); ++k) {
        mx += log_n[k] / 4.0;
        my += log_gap[k] / 4.0;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < log_n.size(); ++k) {
        sxy += (log_n[k] - mx) * (log_gap[k] - my);
        sxx += (log_n[k] - mx) * (log_n[k] - mx);
    }
    CHECK(sxy / sxx == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("signal information in bits")
{
    CHECK(signal_information(oracle::make_instance(1, 4, {1, 1, 1, 1}, {1, -1, 1, -1}), 0) == 1.0);
    CHECK(signal_information(oracle::make_instance(1, 4, {1, 1, 1, 1}, {1, 1, 1, 1}), 0) == 0.0);
    CHECK(signal_information(oracle::make_instance(1, 4, {1, 1, 1, 1}, {1, 1, 1, -1}), 0)
          == doctest::Approx(-(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25))));

    double bits = 0.0;
    std::size_t agents = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto inst = sample_instance(params(32, 32, 900 + seed));
        for (std::size_t i = 0; i < 32; ++i) {
            // Direct entropy of the empirical split.
            double plus = 0.0;
            for (std::size_t w = 0; w < 32; ++w) plus += inst.signal(i, w) > 0;
            const double q = plus / 32.0;
            const double h = (q <= 0.0 || q >= 1.0) ? 0.0 : -(q * std::log2(q) + (1 - q) * std::log2(1 - q));
            CHECK(signal_information(inst, i) == doctest::Approx(h).epsilon(1e-14));
            bits += h;
            ++agents;
        }
    }
    CHECK(bits / static_cast<double>(agents) >= 0.95);
}

TEST_CASE("diagnostics table")
{
    const auto row = diagnostics_row(8, 8, 500, 4);
    CHECK(row.bound == indistinguishable_bound(8, 8));
    CHECK(row.n_indist == doctest::Approx(row.bound).epsilon(0.5));
    CHECK(row.mean_bits > 0.8);
    std::ostringstream out;
    write_diagnostics_csv(out, {row});
    CHECK(out.str().rfind("N,Omega,n_indist,bound,mean_gap,mean_bits\n8,8,", 0) == 0);
}
