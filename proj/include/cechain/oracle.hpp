#ifndef CECHAIN_ORACLE_HPP
#define CECHAIN_ORACLE_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "runtime.hpp"

namespace cechain {

/// The grid of execution-time assignments explored by the oracle: every job
/// released inside the window takes one of `levels` evenly spaced values in
/// [BCET, WCET] (endpoints included); jobs outside the window stay at WCET.
struct AssignmentSpace {
    std::vector<JobId> jobs;
    std::vector<std::vector<dtime_t>> levels; // per job, ascending, deduped
    long long count = 1;

    ExecPolicy policy_at(long long index) const
    {
        std::map<JobId, dtime_t> table;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            long long radix = static_cast<long long>(levels[i].size());
            table[jobs[i]] = levels[i][static_cast<std::size_t>(index % radix)];
            index /= radix;
        }
        return ExecPolicy::explicit_times(std::move(table), /*wcet_default=*/true);
    }

    /// Index of the corner where every window job runs its WCET.
    long long all_wcet_index() const { return count - 1; }
};

/// Enumerates the assignment grid for all jobs released in [lo, hi).
inline AssignmentSpace enumerate_assignments(const TaskSet& set, int levels, dtime_t lo,
                                             dtime_t hi, long long budget = 531441)
{
    if (levels < 1)
        throw InputError("level count must be at least 1");
    AssignmentSpace space;
    for (const TaskSpec& t : set.tasks) {
        long long k = 1;
        while (job_release(t, k) < lo)
            ++k;
        for (; job_release(t, k) < hi; ++k) {
            std::vector<dtime_t> vals;
            if (levels == 1 || t.bcet == t.wcet) {
                vals.push_back(t.bcet);
            } else {
                for (int j = 0; j < levels; ++j) {
                    dtime_t v = t.bcet + (t.wcet - t.bcet) * j / (levels - 1);
                    if (vals.empty() || vals.back() != v)
                        vals.push_back(v);
                }
            }
            space.jobs.push_back(JobId{t.id, k});
            space.count *= static_cast<long long>(vals.size());
            space.levels.push_back(std::move(vals));
            if (space.count > budget)
                throw InputError("assignment space exceeds budget of " + std::to_string(budget) +
                                 " runs; reduce levels or shrink the window");
        }
    }
    return space;
}

struct ExhaustiveResult {
    dtime_t max_reaction = 0;
    long long witness_index = -1;
    std::map<JobId, dtime_t> witness_policy;
    Iac witness_iac;
    long long runs = 0;
    std::vector<long long> miss_runs; // assignments excluded for deadline misses
    bool found = false;
};

namespace detail {

inline int oracle_threads(long long work)
{
    if (work < 2048)
        return 1;
    if (const char* env = std::getenv("CECHAIN_THREADS")) {
        int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// One assignment evaluated under either communication model.  Returns the
// longest reaction, or nothing when the run misses a deadline.
template <typename SimulateFn, typename RelationsFn>
std::optional<ReactionSummary> evaluate_run(SimulateFn&& run, RelationsFn&& rels,
                                            const Chain& chain, dtime_t hyperperiod,
                                            dtime_t phase_max, int window_hyperperiods)
{
    auto [trace, tables] = resolve_reactions(run, rels, {chain}, hyperperiod, phase_max,
                                             window_hyperperiods);
    if (!check_schedulability(trace).schedulable())
        return std::nullopt;
    return summarize_reactions(std::move(tables.front()));
}

template <typename EvalFn>
ExhaustiveResult sweep(const AssignmentSpace& space, EvalFn&& eval)
{
    ExhaustiveResult best;
    int nthreads = oracle_threads(space.count);
    std::vector<ExhaustiveResult> partial(static_cast<std::size_t>(nthreads));
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};

    auto work = [&](int who) {
        ExhaustiveResult local;
        long long begin = space.count * who / nthreads;
        long long end = space.count * (who + 1) / nthreads;
        try {
            for (long long i = begin; i < end && !failed.load(std::memory_order_relaxed); ++i) {
                std::optional<ReactionSummary> s = eval(space.policy_at(i));
                ++local.runs;
                if (!s) {
                    if (local.miss_runs.size() < 64)
                        local.miss_runs.push_back(i);
                    continue;
                }
                if (!local.found || s->max_length > local.max_reaction) {
                    local.found = true;
                    local.max_reaction = s->max_length;
                    local.witness_index = i;
                    local.witness_iac = s->argmax;
                }
            }
        } catch (...) {
            if (!failed.exchange(true))
                failure = std::current_exception();
        }
        partial[static_cast<std::size_t>(who)] = std::move(local);
    };

    if (nthreads == 1) {
        work(0);
    } else {
        for (int i = 0; i < nthreads; ++i)
            workers.emplace_back(work, i);
        for (auto& w : workers)
            w.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    // merge in index order: the lowest-index witness of the maximum wins
    for (ExhaustiveResult& p : partial) {
        best.runs += p.runs;
        for (long long i : p.miss_runs)
            if (best.miss_runs.size() < 64)
                best.miss_runs.push_back(i);
        if (p.found && (!best.found || p.max_reaction > best.max_reaction)) {
            best.found = p.found;
            best.max_reaction = p.max_reaction;
            best.witness_index = p.witness_index;
            best.witness_iac = p.witness_iac;
        }
    }
    if (best.found)
        best.witness_policy = space.policy_at(best.witness_index).table();
    return best;
}

} // namespace detail

/// Maximum reaction time over every enumerated execution-time assignment of
/// an untreated system (register communication).
inline ExhaustiveResult exhaustive_max_reaction(const TaskSet& set,
                                                const std::vector<Chain>& chains,
                                                const Chain& chain,
                                                const AssignmentSpace& space,
                                                int window_hyperperiods = 2)
{
    auto edges = graph_edges(chains);
    return detail::sweep(space, [&](const ExecPolicy& p) {
        return detail::evaluate_run(
            [&](dtime_t h) { return simulate(set, p, h); },
            [&](const Trace& t) {
                return detail::RelationSet(edges, register_relations(t, edges));
            },
            chain, set.hyperperiod, set.phase_max, window_hyperperiods);
    });
}

/// Maximum reaction time over every enumerated assignment of a treated
/// system (fixed dataflow, adjusted releases, eligibility blocking).
inline ExhaustiveResult exhaustive_max_reaction(const FramedTaskSet& fset,
                                                const std::vector<Chain>& chains,
                                                const Chain& chain,
                                                const AssignmentSpace& space,
                                                int window_hyperperiods = 2)
{
    auto edges = graph_edges(chains);
    return detail::sweep(space, [&](const ExecPolicy& p) {
        return detail::evaluate_run(
            [&](dtime_t h) { return simulate(fset, p, h); },
            [&](const Trace& t) {
                return detail::RelationSet(edges, dataflow_relations(fset.dataflow, t, edges));
            },
            chain, fset.hyperperiod, fset.phase_adj_max(), window_hyperperiods);
    });
}

/// Timing-anomaly verdict for one chain of an untreated system.
struct TaVerdict {
    bool present = false;
    int cause = 0;                      // 1: chain structure changed, 2: same chain, longer
    dtime_t analyzed_mrt = 0;           // all-WCET value
    dtime_t exhaustive_max = 0;
    std::map<JobId, dtime_t> witness_policy;
    Iac wcet_iac;                       // all-WCET chain at the witness index
    Iac witness_iac;
    long long runs = 0;
};

/// Searches the assignment grid for a run whose reaction exceeds the
/// all-WCET analysis and classifies the structural cause.
inline TaVerdict detect_ta(const System& sys, const Chain& chain, int levels, dtime_t window_lo,
                           dtime_t window_hi, long long budget = 531441,
                           int window_hyperperiods = 2)
{
    ScheduleAnalysis base =
        analyze_schedule(sys.set, {chain}, ExecPolicy::all_wcet(), window_hyperperiods);
    AssignmentSpace space = enumerate_assignments(sys.set, levels, window_lo, window_hi, budget);
    ExhaustiveResult res =
        exhaustive_max_reaction(sys.set, sys.chains, chain, space, window_hyperperiods);

    TaVerdict v;
    v.analyzed_mrt = base.per_chain.front().max_length;
    v.exhaustive_max = res.max_reaction;
    v.runs = res.runs;
    v.present = res.found && res.max_reaction > v.analyzed_mrt;
    if (v.present) {
        v.witness_policy = res.witness_policy;
        v.witness_iac = res.witness_iac;
        for (const Iac& i : base.per_chain.front().iacs)
            if (i.m == res.witness_iac.m)
                v.wcet_iac = i;
        v.cause = (v.wcet_iac.valid && v.wcet_iac.jobs == v.witness_iac.jobs) ? 2 : 1;
    }
    return v;
}

/// Equality check behind the treated system's anomaly-freedom claim: the
/// exhaustive maximum must coincide with the all-WCET analysis.
struct Certification {
    dtime_t analyzed_mrt = 0;
    dtime_t exhaustive_max = 0;
    long long runs = 0;
    bool anomaly_free = false;
};

inline Certification certify_treated(const FramedSystem& fsys, const Chain& chain, int levels,
                                     dtime_t window_lo, dtime_t window_hi,
                                     long long budget = 531441, int window_hyperperiods = 2)
{
    ScheduleAnalysis base =
        analyze_schedule(fsys.set, {chain}, ExecPolicy::all_wcet(), window_hyperperiods);
    AssignmentSpace space =
        enumerate_assignments(fsys.set.base, levels, window_lo, window_hi, budget);
    ExhaustiveResult res =
        exhaustive_max_reaction(fsys.set, fsys.chains, chain, space, window_hyperperiods);
    Certification c;
    c.analyzed_mrt = base.per_chain.front().max_length;
    c.exhaustive_max = res.max_reaction;
    c.runs = res.runs;
    c.anomaly_free = res.found && res.max_reaction == c.analyzed_mrt && res.miss_runs.empty();
    return c;
}

} // namespace cechain

#endif
