#ifndef CECHAIN_BENCHGEN_HPP
#define CECHAIN_BENCHGEN_HPP

#include <cmath>
#include <string>
#include <vector>

#include "model.hpp"
#include "rng.hpp"
#include "sim.hpp"

namespace cechain {

/// Knobs of the synthetic automotive workload.  Period shares, activation
/// modes and tasks-per-period default to uniform draws; substitute the
/// benchmark suite's published tables when fidelity to it matters.
struct BenchConfig {
    TickUnit tick;
    std::vector<dtime_t> periods;        // ticks
    std::vector<double> period_weights;  // same length as periods
    std::vector<double> mean_exec;       // Weibull mean per period group, ticks
    double weibull_shape = 3.0;
    double f_min = 1.3;                  // WCET = avg * uniform[f_min, f_max]
    double f_max = 2.5;
    double alpha = 0.5;                  // BCET = alpha * WCET
    std::vector<double> pj_weights = {1, 1, 1};          // 1..3 activation modes
    std::vector<double> tasks_per_period_weights = {1, 1, 1, 1}; // 2..5 tasks
    int candidates_min = 1000;
    int candidates_max = 1500;
    int chains_min = 30;
    int chains_max = 60;
    int max_tasks = 0;                   // selection constraint; 0 = unbounded
    double util_tolerance = 0.01;

    /// Periods and mean execution times of the automotive benchmark at the
    /// default tick of 1 us (1, 2, 5, ... 1000 ms).
    static BenchConfig automotive()
    {
        BenchConfig cfg;
        cfg.periods = {1000, 2000, 5000, 10000, 20000, 50000, 100000, 200000, 1000000};
        cfg.period_weights.assign(cfg.periods.size(), 1.0);
        for (dtime_t p : cfg.periods)
            cfg.mean_exec.push_back(static_cast<double>(p) * 0.02);
        return cfg;
    }

    void validate() const
    {
        if (periods.empty() || periods.size() != period_weights.size() ||
            periods.size() != mean_exec.size())
            throw InputError("config: periods, period_weights and mean_exec must align");
        for (dtime_t p : periods)
            if (p <= 0)
                throw InputError("config: periods must be positive");
        for (double m : mean_exec)
            if (m <= 0)
                throw InputError("config: mean_exec must be positive");
        if (!(f_min > 0) || f_min > f_max)
            throw InputError("config: need 0 < f_min <= f_max");
        if (!(alpha > 0) || alpha > 1)
            throw InputError("config: need 0 < alpha <= 1");
        if (pj_weights.size() != 3 || tasks_per_period_weights.size() != 4)
            throw InputError("config: pj_weights has 3 entries, tasks_per_period_weights 4");
        if (candidates_min < 1 || candidates_min > candidates_max)
            throw InputError("config: bad candidate count range");
        if (chains_min < 1 || chains_min > chains_max)
            throw InputError("config: bad chain count range");
        if (!(util_tolerance > 0))
            throw InputError("config: util_tolerance must be positive");
    }
};

namespace detail {

inline double weibull_draw(Rng& rng, double shape, double mean)
{
    // inverse CDF with the scale set so the distribution mean equals `mean`
    double scale = mean / std::tgamma(1.0 + 1.0 / shape);
    double u = rng.real();
    return scale * std::pow(-std::log1p(-u), 1.0 / shape);
}

} // namespace detail

/// Draws candidate tasks: period by weighted choice, WCET from the period
/// group's Weibull average scaled by a uniform factor and clamped to the
/// period, BCET as the alpha fraction.  Priorities are assigned later,
/// rate-monotonically, on the selected subset.
inline std::vector<TaskSpec> gen_candidates(const BenchConfig& cfg, int n, Rng& rng)
{
    cfg.validate();
    std::vector<TaskSpec> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        TaskSpec t;
        t.id = i;
        while (true) {
            std::size_t g = rng.weighted(cfg.period_weights.data(), cfg.period_weights.size());
            t.period = cfg.periods[g];
            double avg = detail::weibull_draw(rng, cfg.weibull_shape, cfg.mean_exec[g]);
            double f = cfg.f_min + rng.real() * (cfg.f_max - cfg.f_min);
            t.wcet = std::min<dtime_t>(t.period, std::llround(avg * f));
            if (t.wcet < 1)
                continue; // degenerate draw
            t.bcet = std::max<dtime_t>(1, std::llround(cfg.alpha * static_cast<double>(t.wcet)));
            break;
        }
        out.push_back(t);
    }
    return out;
}

/// Picks a subset whose utilization lands within the tolerance of the
/// target, by randomized greedy fill plus local add/drop/swap repair.
inline std::vector<TaskSpec> select_utilization(const std::vector<TaskSpec>& candidates,
                                                double target, double tolerance, Rng& rng,
                                                int max_tasks = 0, int attempts = 64)
{
    if (candidates.empty())
        throw InputError("no candidate tasks to select from");
    auto util = [](const TaskSpec& t) {
        return static_cast<double>(t.wcet) / static_cast<double>(t.period);
    };

    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::vector<std::size_t> idx(candidates.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            idx[i] = i;
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.below(i)]);

        std::vector<std::size_t> chosen;
        double sum = 0;
        for (std::size_t i : idx) {
            if (max_tasks > 0 && chosen.size() >= static_cast<std::size_t>(max_tasks))
                break;
            double u = util(candidates[i]);
            if (sum + u <= target + tolerance) {
                chosen.push_back(i);
                sum += u;
            }
        }
        // local repair: swap a member against an outsider when it helps
        for (int round = 0; round < 4000 && std::abs(sum - target) > tolerance; ++round) {
            std::size_t out_i = rng.below(idx.size());
            bool member = std::find(chosen.begin(), chosen.end(), out_i) != chosen.end();
            if (member) {
                double next = sum - util(candidates[out_i]);
                if (std::abs(next - target) < std::abs(sum - target)) {
                    chosen.erase(std::find(chosen.begin(), chosen.end(), out_i));
                    sum = next;
                }
            } else {
                double next = sum + util(candidates[out_i]);
                bool room = max_tasks == 0 || chosen.size() < static_cast<std::size_t>(max_tasks);
                if (room && std::abs(next - target) < std::abs(sum - target)) {
                    chosen.push_back(out_i);
                    sum = next;
                }
            }
        }
        if (!chosen.empty()) {
            std::sort(chosen.begin(), chosen.end());
            std::vector<TaskSpec> tasks;
            for (std::size_t i : chosen)
                tasks.push_back(candidates[i]);
            if (std::abs(utilization(tasks) - target) > tolerance)
                continue;
            // dense ids and rate-monotonic priorities, generation order
            // breaking period ties
            std::vector<std::size_t> by_period(tasks.size());
            for (std::size_t i = 0; i < tasks.size(); ++i)
                by_period[i] = i;
            std::stable_sort(by_period.begin(), by_period.end(), [&](std::size_t a, std::size_t b) {
                return tasks[a].period < tasks[b].period;
            });
            for (std::size_t rank = 0; rank < by_period.size(); ++rank)
                tasks[by_period[rank]].priority = static_cast<int>(tasks.size() - rank);
            for (std::size_t i = 0; i < tasks.size(); ++i)
                tasks[i].id = static_cast<int>(i);
            return tasks;
        }
    }
    throw InfeasibleError("no subset reaches utilization " + std::to_string(target) +
                          " within tolerance " + std::to_string(tolerance));
}

/// Builds cause-effect chains: each draws 1-3 distinct periods, then 2-5
/// tasks per period without replacement; tasks are ordered by a fixed
/// random rank so the union graph stays acyclic.
inline std::vector<Chain> gen_chains(const TaskSet& set, const BenchConfig& cfg, Rng& rng)
{
    std::map<dtime_t, std::vector<int>> groups;
    for (const TaskSpec& t : set.tasks)
        groups[t.period].push_back(t.id);
    std::vector<dtime_t> usable;
    for (const auto& [p, ids] : groups)
        if (ids.size() >= 2)
            usable.push_back(p);
    if (usable.empty())
        throw InfeasibleError("no period group has the two tasks a chain needs");

    // global topological order: position in a seeded shuffle
    std::vector<int> rank(static_cast<std::size_t>(set.size()));
    {
        std::vector<int> perm(rank.size());
        for (std::size_t i = 0; i < perm.size(); ++i)
            perm[i] = static_cast<int>(i);
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
        for (std::size_t pos = 0; pos < perm.size(); ++pos)
            rank[static_cast<std::size_t>(perm[pos])] = static_cast<int>(pos);
    }

    int want = static_cast<int>(rng.range(cfg.chains_min, cfg.chains_max));
    std::vector<Chain> chains;
    for (int c = 0; c < want; ++c) {
        std::size_t pj = 1 + rng.weighted(cfg.pj_weights.data(), 3);
        pj = std::min(pj, usable.size());
        // distinct periods, resampled on collision
        std::vector<dtime_t> picked;
        while (picked.size() < pj) {
            dtime_t p = usable[rng.below(usable.size())];
            if (std::find(picked.begin(), picked.end(), p) == picked.end())
                picked.push_back(p);
        }
        Chain chain;
        for (dtime_t p : picked) {
            const std::vector<int>& group = groups[p];
            std::size_t n = 2 + rng.weighted(cfg.tasks_per_period_weights.data(), 4);
            n = std::min(n, group.size());
            std::vector<int> pool = group;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t j = i + rng.below(pool.size() - i);
                std::swap(pool[i], pool[j]);
                chain.tasks.push_back(pool[i]);
            }
        }
        std::sort(chain.tasks.begin(), chain.tasks.end(),
                  [&](int a, int b) { return rank[static_cast<std::size_t>(a)] <
                                             rank[static_cast<std::size_t>(b)]; });
        chains.push_back(std::move(chain));
    }
    validate_chains(set, chains);
    return chains;
}

/// One generated benchmark entry: the system plus its schedulability tag
/// (unschedulable sets are kept and tagged, never dropped silently).
struct GeneratedSystem {
    System sys;
    std::uint64_t seed = 0;
    double util_target = 0;
    double util_actual = 0;
    bool schedulable = false;
};

inline GeneratedSystem generate_system(const BenchConfig& cfg, double util_target,
                                       std::uint64_t seed)
{
    cfg.validate();
    Rng rng(mix_key(seed, 0x6365636861696eULL));
    int n = static_cast<int>(rng.range(cfg.candidates_min, cfg.candidates_max));
    std::vector<TaskSpec> cand = gen_candidates(cfg, n, rng);
    std::vector<TaskSpec> tasks = select_utilization(cand, util_target, cfg.util_tolerance, rng,
                                                     cfg.max_tasks);
    GeneratedSystem out;
    out.seed = seed;
    out.util_target = util_target;
    out.util_actual = utilization(tasks);
    out.sys.tick = cfg.tick;
    out.sys.set = validate_task_set(std::move(tasks));
    out.sys.chains = gen_chains(out.sys.set, cfg, rng);

    Trace wc = simulate(out.sys.set, ExecPolicy::all_wcet(),
                        2 * out.sys.set.hyperperiod + out.sys.set.phase_max + 1);
    out.schedulable = check_schedulability(wc).schedulable();
    return out;
}

} // namespace cechain

#endif
