#include "infoeff/equilibrium.hpp"

#include "infoeff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace infoeff {

void SolverOptions::validate() const
{
    require(kt_tol > 0.0, "kt_tol must be > 0");
    require(max_iter >= 1, "max_iter must be >= 1");
    require(step >= 0.0, "step must be >= 0");
}

double kt_residual(const MarketInstance& instance, const Allocation& alloc, double eps, KtMask mask)
{
    const auto grad = hamiltonian_gradient(instance, alloc, eps);
    auto violation = [](double z, double g) { return z > 0.0 ? std::abs(g) : std::max(0.0, -g); };

    double worst = 0.0;
    if (mask.informed) {
        for (std::size_t i = 0; i < instance.n_agents(); ++i)
            for (SignalIndex m : {kMinus, kPlus}) {
                if (instance.signal_count(i, m) == 0) continue;
                worst = std::max(worst, violation(alloc.z[i][m], grad.z[i][m]));
            }
    }
    if (mask.chartist)
        for (SignalIndex m : {kMinus, kPlus}) worst = std::max(worst, violation(alloc.z0[m], grad.z0[m]));
    return worst;
}

namespace {

double mean_price(const MarketInstance& instance, const Allocation& alloc)
{
    const auto prices = clearing_prices(instance, alloc);
    double sum = 0.0;
    for (const auto& row : prices.p) sum += row[kMinus] + row[kPlus];
    return sum / (2.0 * static_cast<double>(instance.n_states()));
}

Allocation starting_point(const MarketInstance& instance, const SolverOptions& options)
{
    Allocation alloc(instance.n_agents());
    if (!options.init_seed) return alloc;

    std::mt19937_64 rng(*options.init_seed);
    const double r_bar = instance.params().mean_return;
    const double n = static_cast<double>(instance.n_agents());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < alloc.n_agents(); ++i)
        for (SignalIndex m : {kMinus, kPlus}) {
            const double draw = 2.0 * r_bar * unit(rng);
            alloc.z[i][m] = options.informed && instance.signal_count(i, m) > 0 ? draw : 0.0;
        }
    if (options.chartist) {
        alloc.z0 = {n * r_bar * unit(rng), n * r_bar * unit(rng)};
        if (options.tie_chartist) alloc.z0[kPlus] = alloc.z0[kMinus];
    }
    return alloc;
}

// Exact cyclic coordinate descent. H_eps is quadratic along every coordinate, so each
// update jumps to the clipped one-dimensional minimizer.
class CoordinateDescent {
public:
    CoordinateDescent(const MarketInstance& instance, double eps, const SolverOptions& options)
        : instance_(instance), eps_(eps), options_(options), n_(static_cast<double>(instance.n_agents()))
    {
        const std::size_t n_agents = instance.n_agents();
        const std::size_t n_states = instance.n_states();
        offsets_.reserve(2 * n_agents + 1);
        offsets_.push_back(0);
        for (std::size_t i = 0; i < n_agents; ++i) {
            const auto row = instance.agent_signals(i);
            for (SignalIndex m : {kMinus, kPlus}) {
                for (std::size_t w = 0; w < n_states; ++w)
                    if (signal_index(row[w]) == m) states_.push_back(static_cast<std::uint32_t>(w));
                offsets_.push_back(states_.size());
            }
        }
        alloc_ = starting_point(instance, options);
        refresh_volume();
    }

    EquilibriumResult run()
    {
        EquilibriumResult result;
        const KtMask mask{options_.chartist, options_.informed};
        double residual = kt_residual(instance_, alloc_, eps_, mask);
        std::uint64_t sweep = 0;
        while (residual > options_.kt_tol && sweep < options_.max_iter) {
            do_sweep();
            ++sweep;
            if (sweep % 64 == 0) refresh_volume();
            if (options_.trace) result.trace.push_back(objective());
            // The KT scan costs as much as a sweep; amortize it.
            if (sweep % kCheckEvery == 0 || sweep == options_.max_iter)
                residual = kt_residual(instance_, alloc_, eps_, mask);
        }
        result.alloc = alloc_;
        result.iterations = sweep;
        result.kt_residual = residual;
        result.converged = residual <= options_.kt_tol;
        return result;
    }

private:
    static constexpr std::uint64_t kCheckEvery = 4;

    void refresh_volume()
    {
        volume_.assign(instance_.n_states(), 0.0);
        for (std::size_t i = 0; i < instance_.n_agents(); ++i)
            for (SignalIndex m : {kMinus, kPlus})
                for (auto w : members(i, m)) volume_[w] += alloc_.z[i][m];
    }

    [[nodiscard]] std::span<const std::uint32_t> members(std::size_t i, SignalIndex m) const
    {
        const std::size_t slot = 2 * i + m;
        return std::span<const std::uint32_t>(states_).subspan(offsets_[slot], offsets_[slot + 1] - offsets_[slot]);
    }

    [[nodiscard]] double objective() const
    {
        double quad = 0.0;
        for (std::size_t w = 0; w < instance_.n_states(); ++w)
            for (SignalIndex k0 : {kMinus, kPlus}) {
                const double r = (volume_[w] + alloc_.z0[k0]) / n_ - instance_.ret(w);
                quad += 0.5 * r * r;
            }
        return 0.5 * quad + eps_ / (2.0 * n_) * alloc_.total_informed();
    }

    void do_sweep()
    {
        const std::size_t n_states = instance_.n_states();
        if (options_.chartist) {
            // Both chartist components share the minimizer N mean(R) - mean(V).
            double gap = 0.0;
            for (std::size_t w = 0; w < n_states; ++w) gap += n_ * instance_.ret(w) - volume_[w];
            const double z0 = std::max(0.0, gap / static_cast<double>(n_states));
            alloc_.z0 = {z0, z0};
        }
        if (!options_.informed) return;

        const double cost = eps_ / (2.0 * n_);
        for (std::size_t i = 0; i < instance_.n_agents(); ++i) {
            for (SignalIndex m : {kMinus, kPlus}) {
                const auto states = members(i, m);
                if (states.empty()) continue;
                const double z0_bar = 0.5 * (alloc_.z0[kMinus] + alloc_.z0[kPlus]);
                double residual_sum = 0.0;
                for (auto w : states) residual_sum += (volume_[w] + z0_bar) / n_ - instance_.ret(w);
                const double grad = residual_sum / n_ + cost;
                const double curvature = static_cast<double>(states.size()) / (n_ * n_);
                const double old = alloc_.z[i][m];
                const double updated = std::max(0.0, old - grad / curvature);
                const double change = updated - old;
                if (change == 0.0) continue;
                alloc_.z[i][m] = updated;
                for (auto w : states) volume_[w] += change;
            }
        }
    }

    const MarketInstance& instance_;
    double eps_;
    const SolverOptions& options_;
    double n_;
    std::vector<std::uint32_t> states_;
    std::vector<std::size_t> offsets_;
    Allocation alloc_;
    std::vector<double> volume_;
};

// Accelerated projected gradient on the free components, written against the
// model's full gradient so it shares no bookkeeping with coordinate descent.
class ProjectedGradient {
public:
    ProjectedGradient(const MarketInstance& instance, double eps, const SolverOptions& options)
        : instance_(instance), eps_(eps), options_(options)
    {
        for (std::size_t i = 0; i < instance.n_agents(); ++i)
            for (SignalIndex m : {kMinus, kPlus})
                free_.push_back(options.informed && instance.signal_count(i, m) > 0);
    }

    EquilibriumResult run()
    {
        const KtMask mask{options_.chartist, options_.informed};
        Allocation x = starting_point(instance_, options_);
        project(x);
        const double step = options_.step > 0.0 ? options_.step : 1.0 / curvature_bound();

        EquilibriumResult result;
        Allocation x_prev = x;
        Allocation y = x;
        double momentum = 1.0;
        double residual = kt_residual(instance_, x, eps_, mask);
        std::uint64_t iter = 0;
        while (residual > options_.kt_tol && iter < options_.max_iter) {
            const auto grad = gradient(y);
            Allocation next = y;
            axpy(next, -step, grad);
            project(next);

            if (options_.accelerate) {
                // Restart momentum when the step opposes the gradient.
                double alignment = 0.0;
                for_each_component(next, [&](double& v, std::size_t slot) { alignment += grad_at(grad, slot) * (v - get(x, slot)); });
                const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
                const double beta = alignment > 0.0 ? 0.0 : (momentum - 1.0) / next_momentum;
                momentum = alignment > 0.0 ? 1.0 : next_momentum;
                x_prev = x;
                x = next;
                y = x;
                for_each_component(y, [&](double& v, std::size_t slot) { v += beta * (get(x, slot) - get(x_prev, slot)); });
                project(y);
            } else {
                x = next;
                y = x;
            }
            ++iter;
            if (options_.trace) result.trace.push_back(hamiltonian_eps(instance_, x, eps_));
            residual = kt_residual(instance_, x, eps_, mask);
        }
        result.alloc = x;
        result.iterations = iter;
        result.kt_residual = residual;
        result.converged = residual <= options_.kt_tol;
        return result;
    }

private:
    // Component slots: 2i+m for informed, 2N and 2N+1 for the chartist.
    template <typename F>
    void for_each_component(Allocation& a, F&& f) const
    {
        for (std::size_t i = 0; i < a.n_agents(); ++i)
            for (SignalIndex m : {kMinus, kPlus}) f(a.z[i][m], 2 * i + m);
        const std::size_t base = 2 * a.n_agents();
        f(a.z0[kMinus], base);
        f(a.z0[kPlus], base + 1);
    }

    [[nodiscard]] static double get(const Allocation& a, std::size_t slot)
    {
        const std::size_t base = 2 * a.n_agents();
        return slot < base ? a.z[slot / 2][slot % 2] : a.z0[slot - base];
    }

    [[nodiscard]] static double grad_at(const AllocationGradient& g, std::size_t slot)
    {
        const std::size_t base = 2 * g.z.size();
        return slot < base ? g.z[slot / 2][slot % 2] : g.z0[slot - base];
    }

    // The tie z0+ = z0- is part of the feasible set and enforced by `project`.
    [[nodiscard]] AllocationGradient gradient(const Allocation& a) const
    {
        return hamiltonian_gradient(instance_, a, eps_);
    }

    void axpy(Allocation& a, double scale, const AllocationGradient& g) const
    {
        for_each_component(a, [&](double& v, std::size_t slot) { v += scale * grad_at(g, slot); });
    }

    void project(Allocation& a) const
    {
        for (std::size_t i = 0; i < a.n_agents(); ++i)
            for (SignalIndex m : {kMinus, kPlus}) {
                auto& v = a.z[i][m];
                v = free_[2 * i + m] ? std::max(0.0, v) : 0.0;
            }
        if (!options_.chartist) {
            a.z0 = {0.0, 0.0};
        } else if (options_.tie_chartist) {
            const double tied = std::max(0.0, 0.5 * (a.z0[kMinus] + a.z0[kPlus]));
            a.z0 = {tied, tied};
        } else {
            a.z0 = {std::max(0.0, a.z0[kMinus]), std::max(0.0, a.z0[kPlus])};
        }
    }

    // Power iteration on the (affine-free) Hessian of the quadratic part.
    [[nodiscard]] double curvature_bound() const
    {
        const Allocation zero(instance_.n_agents());
        const auto g0 = gradient(zero);
        Allocation v(instance_.n_agents(), 1.0, options_.chartist ? 1.0 : 0.0);
        double lambda = 0.0;
        for (int it = 0; it < 100; ++it) {
            project_free(v);
            double norm = 0.0;
            for_each_component(v, [&](double& x, std::size_t) { norm += x * x; });
            norm = std::sqrt(norm);
            if (norm == 0.0) return 1.0;
            for_each_component(v, [&](double& x, std::size_t) { x /= norm; });
            const auto g = gradient(v);
            Allocation hv(instance_.n_agents());
            for_each_component(hv, [&](double& x, std::size_t slot) { x = grad_at(g, slot) - grad_at(g0, slot); });
            project_free(hv);
            double rayleigh = 0.0;
            for_each_component(hv, [&](double& x, std::size_t slot) { rayleigh += x * get(v, slot); });
            lambda = rayleigh;
            v = hv;
        }
        return 1.05 * lambda + 1e-300;
    }

    void project_free(Allocation& a) const
    {
        for (std::size_t i = 0; i < a.n_agents(); ++i)
            for (SignalIndex m : {kMinus, kPlus})
                if (!free_[2 * i + m]) a.z[i][m] = 0.0;
        if (!options_.chartist) a.z0 = {0.0, 0.0};
    }

    const MarketInstance& instance_;
    double eps_;
    const SolverOptions& options_;
    std::vector<bool> free_;
};

} // namespace

EquilibriumResult solve(const MarketInstance& instance, double eps, const SolverOptions& options)
{
    options.validate();
    require(std::isfinite(eps), "eps must be finite");

    EquilibriumResult result;
    switch (options.method) {
    case SolverMethod::coordinate_descent:
        result = CoordinateDescent(instance, eps, options).run();
        break;
    case SolverMethod::projected_gradient:
        result = ProjectedGradient(instance, eps, options).run();
        break;
    }
    result.objective = hamiltonian_eps(instance, result.alloc, eps);
    result.distance = distance_price_return(instance, result.alloc);
    result.mean_price = mean_price(instance, result.alloc);
    return result;
}

CrosscheckReport stationarity_crosscheck(const MarketInstance& instance, double eps, const EquilibriumResult& result,
                                         const RunSummary& run)
{
    CrosscheckReport report;
    report.h_solver = result.objective;
    report.h_dynamics = hamiltonian_eps(instance, run.mean_alloc, eps);
    report.h_rel_gap = std::abs(report.h_dynamics - report.h_solver) / std::abs(report.h_solver);
    report.distance_solver = result.distance;
    report.distance_dynamics = distance_price_return(instance, run.mean_alloc);
    report.distance_rel_gap = std::abs(report.distance_dynamics - report.distance_solver) / report.distance_solver;
    return report;
}

} // namespace infoeff
