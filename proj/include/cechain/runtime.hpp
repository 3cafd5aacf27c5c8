#ifndef CECHAIN_RUNTIME_HPP
#define CECHAIN_RUNTIME_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "dataflow.hpp"

namespace cechain {

/// One buffer read: which producer's token the reader found in its slot,
/// versus the producer the dataflow designates.
struct CommLogEntry {
    JobId reader;
    int writer_task = -1;
    dtime_t time = 0;                // read instant (the reader's start)
    long long slot = 0;
    std::optional<JobId> intended;   // empty = initial value
    std::optional<JobId> actual;     // token found in the slot
    bool ok = false;

    friend bool operator==(const CommLogEntry&, const CommLogEntry&) = default;
};

/// Chronological record of all buffered communication in one run.
struct CommLog {
    std::vector<CommLogEntry> entries;
    std::map<int, long long> max_occupancy; // writer task -> max live tokens
    bool rfi_ok = true;

    const CommLogEntry* first_violation() const
    {
        for (const CommLogEntry& e : entries)
            if (!e.ok)
                return &e;
        return nullptr;
    }
};

namespace detail {

struct BufferEvent {
    dtime_t time;
    bool is_read; // writes apply first at equal times (finish before start)
    int task;     // writer task of the buffer touched
    std::size_t record_task;
    long long record_k;
    std::size_t binding; // read: index into the frame's bindings
};

} // namespace detail

/// Replays a treated-system trace through the multi-buffer plan.  Writes go
/// to the writer's rotating slot; each read fetches the slot its designated
/// producer uses and the token found there must carry that producer's
/// identity (read-from-intended).  Buffer sizes may be overridden to probe
/// undersized plans.
inline CommLog replay_buffers(const FramedTaskSet& fset, const Trace& trace,
                              const std::map<int, long long>* override_sizes = nullptr)
{
    const std::map<int, long long>& sizes = override_sizes ? *override_sizes : fset.buffer_sizes;
    auto slot_of = [&sizes](int task, long long k) {
        auto it = sizes.find(task);
        long long bs = it == sizes.end() ? 1 : it->second;
        return detail::floor_mod(k - 1, bs);
    };

    std::vector<detail::BufferEvent> events;
    for (std::size_t task = 0; task < trace.by_task.size(); ++task) {
        bool writes = sizes.count(static_cast<int>(task)) != 0;
        for (const JobRecord& r : trace.by_task[task]) {
            if (r.job.task < 0)
                continue;
            if (r.start != kNoTime && r.frame >= 0) {
                const Frame& f = fset.frames[task][static_cast<std::size_t>(r.frame)];
                for (std::size_t b = 0; b < f.reads.size(); ++b)
                    events.push_back({r.start, true, f.reads[b].writer_task, task, r.job.k, b});
            }
            if (writes && r.finish != kNoTime && !r.unfinished)
                events.push_back({r.finish, false, static_cast<int>(task), task, r.job.k, 0});
        }
    }
    std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
        if (a.time != b.time)
            return a.time < b.time;
        if (a.is_read != b.is_read)
            return !a.is_read;
        if (a.record_task != b.record_task)
            return a.record_task < b.record_task;
        return a.record_k < b.record_k;
    });

    std::map<int, std::vector<std::optional<JobId>>> pool;
    for (const auto& [task, bs] : sizes)
        pool[task].assign(static_cast<std::size_t>(bs), std::nullopt);

    CommLog log;
    for (const detail::BufferEvent& ev : events) {
        if (!ev.is_read) {
            pool[ev.task][static_cast<std::size_t>(slot_of(ev.task, ev.record_k))] =
                JobId{ev.task, ev.record_k};
            continue;
        }
        const JobRecord& r = trace.at(JobId{static_cast<int>(ev.record_task), ev.record_k});
        const Frame& f = fset.frames[ev.record_task][static_cast<std::size_t>(r.frame)];
        const ReadBinding& rb = f.reads[ev.binding];
        long long nw = fset.dataflow.frames_per_task[static_cast<std::size_t>(rb.writer_task)];
        long long n = (r.job.k - 1) /
                      static_cast<long long>(fset.frames[ev.record_task].size());
        long long intended_k = (n + rb.delta) * nw + rb.writer_frame + 1;

        CommLogEntry entry;
        entry.reader = r.job;
        entry.writer_task = rb.writer_task;
        entry.time = ev.time;
        entry.slot = slot_of(rb.writer_task, intended_k);
        if (intended_k >= 1)
            entry.intended = JobId{rb.writer_task, intended_k};
        entry.actual = pool[rb.writer_task][static_cast<std::size_t>(entry.slot)];
        entry.ok = entry.actual == entry.intended;
        log.rfi_ok = log.rfi_ok && entry.ok;
        log.entries.push_back(entry);
    }

    // Occupancy: a token is live from its write until the last read that
    // wants it; the plan must never need more live tokens than slots.
    std::map<JobId, dtime_t> last_need;
    for (const CommLogEntry& e : log.entries)
        if (e.intended) {
            auto [it, fresh] = last_need.try_emplace(*e.intended, e.time);
            if (!fresh)
                it->second = std::max(it->second, e.time);
        }
    for (const auto& [task, bs] : sizes) {
        std::vector<std::pair<dtime_t, int>> sweep;
        for (const JobRecord& r : trace.by_task[static_cast<std::size_t>(task)]) {
            if (r.job.task < 0 || r.finish == kNoTime || r.unfinished)
                continue;
            auto it = last_need.find(r.job);
            dtime_t until = it == last_need.end() ? r.finish : it->second;
            sweep.push_back({r.finish, 1});
            sweep.push_back({until + 1, -1});
        }
        std::sort(sweep.begin(), sweep.end());
        long long live = 0, peak = 0;
        for (const auto& [t, d] : sweep) {
            live += d;
            peak = std::max(peak, live);
        }
        log.max_occupancy[task] = peak;
    }
    return log;
}

/// Simulates the treated system and audits every buffered read against the
/// dataflow.
inline std::pair<Trace, CommLog> online_run(const FramedTaskSet& fset, const ExecPolicy& policy,
                                            dtime_t horizon)
{
    Trace trace = simulate(fset, policy, horizon);
    CommLog log = replay_buffers(fset, trace);
    return {std::move(trace), std::move(log)};
}

inline void require_rfi(const CommLog& log)
{
    if (const CommLogEntry* v = log.first_violation())
        throw PropertyError("buffer read violation: " + to_string(v->reader) + " found " +
                            (v->actual ? to_string(*v->actual) : std::string("initial value")) +
                            " instead of " +
                            (v->intended ? to_string(*v->intended) : std::string("initial value")));
}

/// True when every logged read matches the dataflow's designated producer;
/// this is the literal statement of a deterministic dataflow.
inline bool verify_dataflow(const CommLog& log, const Dataflow& ddf)
{
    for (const CommLogEntry& e : log.entries) {
        const DataflowEdge* edge = ddf.edge(e.writer_task, e.reader.task);
        if (!edge)
            return false;
        if (e.actual != ddf.intended_writer(*edge, e.reader.k))
            return false;
    }
    return true;
}

/// Checks an observed register-communication relation against the dataflow
/// (used to show untreated runs diverge from it).
inline bool matches_dataflow(const CommRelation& rel, const Dataflow& ddf)
{
    const DataflowEdge* edge = ddf.edge(rel.writer_task, rel.reader_task);
    if (!edge)
        return false;
    for (const auto& [reader_k, writer_k] : rel.writer_of) {
        std::optional<JobId> want = ddf.intended_writer(*edge, reader_k);
        std::optional<JobId> got =
            writer_k ? std::optional<JobId>(JobId{rel.writer_task, *writer_k}) : std::nullopt;
        if (want != got)
            return false;
    }
    return true;
}

/// Reaction times of one treated run: the dataflow fixes every job chain,
/// so only the event times of this run enter the lengths.
struct RunReactions {
    Trace trace;
    CommLog log;
    std::vector<ReactionSummary> per_chain;
};

inline RunReactions run_and_measure(const FramedTaskSet& fset, const std::vector<Chain>& chains,
                                    const ExecPolicy& policy, int window_hyperperiods = 2)
{
    auto edges = graph_edges(chains);
    auto [trace, tables] = detail::resolve_reactions(
        [&](dtime_t h) { return simulate(fset, policy, h); },
        [&](const Trace& t) {
            return detail::RelationSet(edges, dataflow_relations(fset.dataflow, t, edges));
        },
        chains, fset.hyperperiod, fset.phase_adj_max(), window_hyperperiods);
    RunReactions out;
    out.log = replay_buffers(fset, trace);
    out.trace = std::move(trace);
    for (auto& tbl : tables)
        out.per_chain.push_back(summarize_reactions(std::move(tbl)));
    return out;
}

} // namespace cechain

#endif
