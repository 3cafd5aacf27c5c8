#ifndef CECHAIN_DATAFLOW_HPP
#define CECHAIN_DATAFLOW_HPP

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "bounds.hpp"

namespace cechain {

namespace detail {

struct FrameRelation {
    std::vector<FrameRef> writer_of; // by reader frame
    std::vector<bool> seen;
};

// Reduces the register relation of one edge, restricted to readers released
// in [lo, hi), to frame indices plus hyperperiod offsets.
inline FrameRelation reduce_to_frames(const Trace& trace, const CommRelation& rel,
                                      long long n_reader, long long n_writer, dtime_t lo,
                                      dtime_t hi)
{
    FrameRelation out;
    out.writer_of.resize(static_cast<std::size_t>(n_reader));
    out.seen.resize(static_cast<std::size_t>(n_reader), false);
    for (const auto& [reader_k, writer_k] : rel.writer_of) {
        const JobRecord& r = trace.at(JobId{rel.reader_task, reader_k});
        if (r.release < lo || r.release >= hi)
            continue;
        if (!writer_k)
            throw InfeasibleError("steady-state reader " + to_string(r.job) +
                                  " observed no prior write");
        long long j0r = reader_k - 1;
        long long j0w = *writer_k - 1;
        std::size_t frame = static_cast<std::size_t>(j0r % n_reader);
        if (out.seen[frame])
            throw InfeasibleError("reader frame mapped twice within one hyperperiod");
        out.seen[frame] = true;
        out.writer_of[frame] = FrameRef{static_cast<int>(j0w % n_writer),
                                        static_cast<int>(j0w / n_writer - j0r / n_reader)};
    }
    for (bool s : out.seen)
        if (!s)
            throw InfeasibleError("steady window does not cover every reader frame");
    return out;
}

} // namespace detail

/// Extracts the deterministic dataflow: the register communication relation
/// of the all-WCET schedule, frozen on the second (steady) hyperperiod and
/// expressed per frame.  The third hyperperiod must reproduce it; a
/// mismatch means the schedule has not settled, which cannot happen for a
/// schedulable set.
inline Dataflow extract_dataflow(const TaskSet& set, const std::vector<Chain>& chains)
{
    validate_chains(set, chains);
    const dtime_t h = set.hyperperiod;
    const dtime_t pm = set.phase_max;
    Trace trace = simulate(set, ExecPolicy::all_wcet(), 3 * h + pm + 1);
    SchedulabilityReport rep = check_schedulability(trace);
    if (!rep.schedulable())
        throw InfeasibleError("set is unschedulable under all-WCET execution (first miss: " +
                              to_string(rep.misses.front()) + ")");

    Dataflow ddf;
    ddf.hyperperiod = h;
    ddf.frames_per_task = detail::frames_per_task(set);

    for (const Edge& e : graph_edges(chains)) {
        CommRelation rel = register_comm(trace, e.first, e.second);
        long long nr = ddf.frames_per_task[static_cast<std::size_t>(e.second)];
        long long nw = ddf.frames_per_task[static_cast<std::size_t>(e.first)];
        detail::FrameRelation steady =
            detail::reduce_to_frames(trace, rel, nr, nw, h + pm, 2 * h + pm);
        detail::FrameRelation next =
            detail::reduce_to_frames(trace, rel, nr, nw, 2 * h + pm, 3 * h + pm);
        if (steady.writer_of != next.writer_of)
            throw InfeasibleError("communication relation is not periodic past the transient");
        DataflowEdge de;
        de.writer = e.first;
        de.reader = e.second;
        de.writer_of = std::move(steady.writer_of);
        ddf.edges.push_back(std::move(de));
    }
    return ddf;
}

/// Slot demand of one reader job: how many buffer slots the writer task
/// needs so that this reader's input survives until its latest possible
/// read.  Counts conservatively with the earliest write times.
namespace detail {

inline long long slot_demand(const Dataflow& ddf, const DataflowEdge& edge, long long reader_k,
                             const RwBounds& bounds)
{
    dtime_t latest_read = bounds.re_max(JobId{edge.reader, reader_k});
    // Anchor: the designated write, or the virtual pre-time-zero instance
    // (k <= 0) whose slot holds the initial value.
    long long nr = ddf.frames_per_task[static_cast<std::size_t>(edge.reader)];
    long long nw = ddf.frames_per_task[static_cast<std::size_t>(edge.writer)];
    long long j0 = reader_k - 1;
    const FrameRef& ref = edge.writer_of[static_cast<std::size_t>(j0 % nr)];
    long long anchor_k = (j0 / nr + ref.delta) * nw + ref.frame + 1;

    // Largest write that may land before the read; anything in the same
    // slot class would clobber the anchor, so the whole span must fit.
    long long max_k = anchor_k;
    for (long long l = std::max<long long>(anchor_k, 1);; ++l) {
        if (bounds.we_min(JobId{edge.writer, l}) > latest_read)
            break;
        max_k = l;
    }
    return std::max<long long>(1, max_k - anchor_k + 1);
}

} // namespace detail

/// Buffer plan: per writer task, the number of slots needed so that every
/// reader can still find its designated producer's data at read time.
inline std::map<int, long long> buffer_sizes(const FramedTaskSet& fset, const RwBounds& bounds)
{
    std::map<int, long long> plan;
    const dtime_t window = 2 * fset.hyperperiod + fset.phase_adj_max();
    for (const DataflowEdge& edge : fset.dataflow.edges) {
        long long& bs = plan[edge.writer];
        bs = std::max<long long>(bs, 1);
        const TaskSpec& reader = fset.base.task(edge.reader);
        for (long long k = 1; job_release(reader, k) < window; ++k)
            bs = std::max(bs, detail::slot_demand(fset.dataflow, edge, k, bounds));
    }
    return plan;
}

/// Builds the treated task set realizing a dataflow: one frame per job in
/// the hyperperiod, phases adjusted so no reader releases before its
/// writers, and the buffer plan attached.
inline FramedTaskSet transform(const TaskSet& set, const std::vector<Chain>& chains,
                               const Dataflow& ddf)
{
    validate_chains(set, chains);
    FramedTaskSet out;
    out.base = set;
    out.hyperperiod = set.hyperperiod;
    out.dataflow = ddf;
    out.frames.resize(static_cast<std::size_t>(set.size()));
    for (const TaskSpec& t : set.tasks) {
        long long n = set.hyperperiod / t.period;
        auto& table = out.frames[static_cast<std::size_t>(t.id)];
        table.resize(static_cast<std::size_t>(n));
        for (long long j = 0; j < n; ++j) {
            table[static_cast<std::size_t>(j)].id = static_cast<int>(j);
            table[static_cast<std::size_t>(j)].phase = t.period * j + t.phase;
            table[static_cast<std::size_t>(j)].phase_adj = t.period * j + t.phase;
        }
    }
    for (const DataflowEdge& e : ddf.edges) {
        auto& table = out.frames[static_cast<std::size_t>(e.reader)];
        for (std::size_t j = 0; j < table.size(); ++j) {
            const FrameRef& ref = e.writer_of[j];
            table[j].reads.push_back(ReadBinding{e.writer, ref.frame, ref.delta});
        }
    }

    // Adjusted phases propagate along the task-level graph; the chain graph
    // is acyclic, so a topological task order settles every frame in one
    // pass.
    auto edges = graph_edges(chains);
    std::map<int, int> indeg;
    for (const TaskSpec& t : set.tasks)
        indeg[t.id] = 0;
    for (const Edge& e : edges)
        ++indeg[e.second];
    std::vector<int> order;
    std::set<int> placed;
    while (order.size() < static_cast<std::size_t>(set.size())) {
        bool progress = false;
        for (auto& [task, deg] : indeg)
            if (deg == 0 && !placed.count(task)) {
                order.push_back(task);
                placed.insert(task);
                for (const Edge& e : edges)
                    if (e.first == task)
                        --indeg[e.second];
                progress = true;
            }
        if (!progress)
            throw InfeasibleError("frame precedence contains a cycle");
    }
    for (int task : order) {
        auto& table = out.frames[static_cast<std::size_t>(task)];
        for (Frame& f : table) {
            dtime_t adj = f.phase;
            for (const ReadBinding& rb : f.reads) {
                const Frame& wf = out.frames[static_cast<std::size_t>(rb.writer_task)]
                                            [static_cast<std::size_t>(rb.writer_frame)];
                adj = std::max(adj, wf.phase_adj + rb.delta * set.hyperperiod);
            }
            f.phase_adj = adj;
        }
    }

    out.buffer_sizes = buffer_sizes(out, make_rw_bounds(out));
    return out;
}

/// Extraction plus transformation in one step.
inline FramedSystem treat(const System& sys)
{
    FramedSystem out;
    out.tick = sys.tick;
    out.set = transform(sys.set, sys.chains, extract_dataflow(sys.set, sys.chains));
    out.chains = sys.chains;
    return out;
}

} // namespace cechain

#endif
