#ifndef CECHAIN_REACTION_HPP
#define CECHAIN_REACTION_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "comm.hpp"
#include "sim.hpp"

namespace cechain {

/// An immediate forward augmented job chain: the job sequence tracing the
/// first response to the external event sampled by the head task's
/// (m+1)-th job, bracketed by the event time z and the actuation time z'.
struct Iac {
    long long m = 0;
    dtime_t z = kNoTime;
    std::vector<JobId> jobs;
    dtime_t z_prime = kNoTime;
    bool valid = false;

    dtime_t length() const { return z_prime - z; }
};

namespace detail {

// Relations for a chain's edges, in edge order; shared lookup across chains.
class RelationSet {
public:
    RelationSet(std::vector<Edge> edges, std::vector<CommRelation> rels)
        : edges_(std::move(edges)), rels_(std::move(rels))
    {
    }

    const CommRelation& of(int writer, int reader) const
    {
        for (std::size_t i = 0; i < edges_.size(); ++i)
            if (edges_[i].first == writer && edges_[i].second == reader)
                return rels_[i];
        throw InputError("no relation for edge " + std::to_string(writer) + " -> " +
                         std::to_string(reader));
    }

private:
    std::vector<Edge> edges_;
    std::vector<CommRelation> rels_;
};

} // namespace detail

/// Builds the immediate forward job chain starting at the head's (m+1)-th
/// job.  Each successor is the first reader affected by its predecessor:
/// directly when the predecessor's output is consumed, otherwise through
/// the next job of the same task whose output is.  Returns nullopt when the
/// chain runs past the jobs covered by the relations.
inline std::optional<std::vector<JobId>>
immediate_forward_chain(const detail::RelationSet& rels, const Chain& chain, long long m)
{
    std::vector<JobId> jobs;
    jobs.push_back(JobId{chain.head(), m + 1});
    for (std::size_t i = 0; i + 1 < chain.tasks.size(); ++i) {
        const CommRelation& rel = rels.of(chain.tasks[i], chain.tasks[i + 1]);
        long long wk = jobs.back().k;
        // first subsequent job of this task (the job itself included) whose
        // output somebody consumes
        while (wk <= rel.max_writer_k && !rel.in_writer_set(wk))
            ++wk;
        if (wk > rel.max_writer_k)
            return std::nullopt;
        jobs.push_back(JobId{chain.tasks[i + 1], rel.readers_of.at(wk).front()});
    }
    return jobs;
}

/// Extends a job chain with the external-event time z (the head task
/// samples at release, so z is the m-th head job's release) and the
/// actuation time z' (the last job's write event).
inline Iac augment(const Trace& trace, const Chain& chain, long long m,
                   const std::optional<std::vector<JobId>>& ic)
{
    Iac iac;
    iac.m = m;
    if (m < 1 || !ic)
        return iac;
    const JobRecord* head = trace.find(JobId{chain.head(), m});
    const JobRecord* last = trace.find(ic->back());
    if (!head || !last || last->unfinished || last->finish == kNoTime)
        return iac;
    iac.jobs = *ic;
    iac.z = head->release;
    iac.z_prime = write_event(*last);
    iac.valid = true;
    return iac;
}

/// All augmented chains of one schedule whose head job (the (m+1)-th)
/// releases inside the enumeration window [0, window_end).  Entries the
/// trace cannot resolve are flagged invalid; the caller extends the trace
/// and retries.  The trace horizon must cover the window so that the set of
/// sampling indices is complete.
inline std::vector<Iac> analyze_reactions(const Trace& trace, const detail::RelationSet& rels,
                                          const Chain& chain, dtime_t window_end)
{
    if (trace.horizon < window_end)
        throw InputError("trace horizon is shorter than the enumeration window");
    std::vector<Iac> out;
    const auto& head_row = trace.by_task[static_cast<std::size_t>(chain.head())];
    for (std::size_t i = 1; i < head_row.size(); ++i) {
        const JobRecord& first = head_row[i];
        if (first.job.task < 0 || first.release >= window_end)
            continue;
        long long m = first.job.k - 1;
        out.push_back(augment(trace, chain, m, immediate_forward_chain(rels, chain, m)));
    }
    return out;
}

struct ReactionSummary {
    std::vector<Iac> iacs; // one per m, all valid
    dtime_t max_length = 0;
    dtime_t min_length = 0;
    Iac argmax;
    Iac argmin;

    double mean_length() const
    {
        if (iacs.empty())
            return 0.0;
        double s = 0;
        for (const Iac& i : iacs)
            s += static_cast<double>(i.length());
        return s / static_cast<double>(iacs.size());
    }
};

/// Reduces a fully resolved reaction table; throws if any entry is invalid.
inline ReactionSummary summarize_reactions(std::vector<Iac> iacs)
{
    if (iacs.empty())
        throw InfeasibleError("no sampling index lies inside the analysis window");
    ReactionSummary s;
    for (const Iac& i : iacs) {
        if (!i.valid)
            throw InfeasibleError("reaction chain unresolved at sampling index " +
                                  std::to_string(i.m));
        if (s.iacs.empty() || i.length() > s.max_length) {
            s.max_length = i.length();
            s.argmax = i;
        }
        if (s.iacs.empty() || i.length() < s.min_length) {
            s.min_length = i.length();
            s.argmin = i;
        }
        s.iacs.push_back(i);
    }
    return s;
}

/// Maximum reaction time of a chain over one schedule: the longest valid
/// augmented chain with the head release inside the enumeration window.
inline ReactionSummary mrt(const Trace& trace, const detail::RelationSet& rels,
                           const Chain& chain, dtime_t window_end)
{
    return summarize_reactions(analyze_reactions(trace, rels, chain, window_end));
}

namespace detail {

struct TracePlan {
    dtime_t window_end = 0;  // head releases enumerated in [0, window_end)
    dtime_t horizon = 0;
};

// Simulation horizon grows until every augmented chain in the window
// resolves; schedules are periodic, so a bounded number of extra
// hyperperiods always suffices.
template <typename SimulateFn, typename RelationsFn>
std::pair<Trace, std::vector<std::vector<Iac>>>
resolve_reactions(SimulateFn&& run, RelationsFn&& make_relations,
                  const std::vector<Chain>& chains, dtime_t hyperperiod, dtime_t phase_max,
                  int window_hyperperiods)
{
    dtime_t window_end = window_hyperperiods * hyperperiod + phase_max;
    dtime_t horizon = window_end + 2 * hyperperiod;
    const dtime_t cap = window_end + 66 * hyperperiod + phase_max;
    while (true) {
        Trace trace = run(horizon);
        RelationSet rels = make_relations(trace);
        std::vector<std::vector<Iac>> tables;
        bool all_valid = true;
        for (const Chain& c : chains) {
            tables.push_back(analyze_reactions(trace, rels, c, window_end));
            for (const Iac& i : tables.back())
                all_valid = all_valid && i.valid;
        }
        if (all_valid)
            return {std::move(trace), std::move(tables)};
        if (horizon > cap)
            throw InfeasibleError("reaction chains do not resolve within " +
                                  std::to_string(cap) + " ticks");
        horizon = horizon * 3 / 2 + hyperperiod;
    }
}

inline void require_schedulable(const Trace& trace, const std::string& what)
{
    SchedulabilityReport rep = check_schedulability(trace);
    if (!rep.schedulable())
        throw InfeasibleError(what + ": deadline miss at " + to_string(rep.misses.front()) +
                              " (reaction analysis is defined for schedulable traces only)");
}

} // namespace detail

/// Per-chain analysis of one plain system under a given policy, using
/// register communication.  Refuses unschedulable traces.
struct ScheduleAnalysis {
    Trace trace;
    std::vector<ReactionSummary> per_chain; // aligned with the input chains
};

inline ScheduleAnalysis analyze_schedule(const TaskSet& set, const std::vector<Chain>& chains,
                                         const ExecPolicy& policy, int window_hyperperiods = 2)
{
    auto edges = graph_edges(chains);
    auto [trace, tables] = detail::resolve_reactions(
        [&](dtime_t h) { return simulate(set, policy, h); },
        [&](const Trace& t) {
            return detail::RelationSet(edges, register_relations(t, edges));
        },
        chains, set.hyperperiod, set.phase_max, window_hyperperiods);
    detail::require_schedulable(trace, "register-communication analysis");
    ScheduleAnalysis out{std::move(trace), {}};
    for (auto& tbl : tables)
        out.per_chain.push_back(summarize_reactions(std::move(tbl)));
    return out;
}

/// Same analysis for the treated system: event times come from the framed
/// simulation and the communication relation is the frozen dataflow.
inline ScheduleAnalysis analyze_schedule(const FramedTaskSet& fset,
                                         const std::vector<Chain>& chains,
                                         const ExecPolicy& policy, int window_hyperperiods = 2)
{
    auto edges = graph_edges(chains);
    auto [trace, tables] = detail::resolve_reactions(
        [&](dtime_t h) { return simulate(fset, policy, h); },
        [&](const Trace& t) {
            return detail::RelationSet(edges, dataflow_relations(fset.dataflow, t, edges));
        },
        chains, fset.hyperperiod, fset.phase_adj_max(), window_hyperperiods);
    detail::require_schedulable(trace, "treated analysis");
    ScheduleAnalysis out{std::move(trace), {}};
    for (auto& tbl : tables)
        out.per_chain.push_back(summarize_reactions(std::move(tbl)));
    return out;
}

} // namespace cechain

#endif
