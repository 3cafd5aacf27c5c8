#ifndef CECHAIN_COMM_HPP
#define CECHAIN_COMM_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "frames.hpp"
#include "trace.hpp"

namespace cechain {

/// Job-level communication relation of one task edge: which writer job each
/// reader job consumed.  Readers that run before any write carry no writer
/// (they see the initial value).
struct CommRelation {
    int writer_task = -1;
    int reader_task = -1;
    std::map<long long, std::optional<long long>> writer_of; // reader k -> writer k
    std::map<long long, std::vector<long long>> readers_of;  // writer k -> reader ks
    long long max_writer_k = 0; // largest writer job visible to this relation

    bool in_writer_set(long long writer_k) const
    {
        auto it = readers_of.find(writer_k);
        return it != readers_of.end() && !it->second.empty();
    }

    void add(long long reader_k, std::optional<long long> writer_k)
    {
        writer_of[reader_k] = writer_k;
        if (writer_k)
            readers_of[*writer_k].push_back(reader_k);
    }
};

/// Register-semantics relation of one edge: each reader consumes the most
/// recent write at or before its read instant.  A write landing exactly at
/// the read instant is visible (finish serializes before start).
inline CommRelation register_comm(const Trace& trace, int writer_task, int reader_task)
{
    CommRelation rel;
    rel.writer_task = writer_task;
    rel.reader_task = reader_task;

    std::vector<std::pair<dtime_t, long long>> writes; // (finish, k)
    for (const JobRecord& r : trace.by_task[static_cast<std::size_t>(writer_task)])
        if (!r.unfinished && r.finish != kNoTime && r.job.task >= 0) {
            writes.push_back({r.finish, r.job.k});
            rel.max_writer_k = std::max(rel.max_writer_k, r.job.k);
        }
    std::sort(writes.begin(), writes.end());

    for (const JobRecord& r : trace.by_task[static_cast<std::size_t>(reader_task)]) {
        if (r.job.task < 0 || r.start == kNoTime)
            continue;
        dtime_t re = read_event(r);
        auto it = std::upper_bound(writes.begin(), writes.end(),
                                   std::pair<dtime_t, long long>{re, std::numeric_limits<long long>::max()});
        if (it == writes.begin())
            rel.add(r.job.k, std::nullopt);
        else
            rel.add(r.job.k, std::prev(it)->second);
    }
    return rel;
}

inline std::vector<CommRelation> register_relations(const Trace& trace,
                                                    const std::vector<Edge>& edges)
{
    std::vector<CommRelation> rels;
    rels.reserve(edges.size());
    for (const Edge& e : edges)
        rels.push_back(register_comm(trace, e.first, e.second));
    return rels;
}

/// The frozen dataflow unrolled over the jobs present in a trace: reader
/// job k of the edge's reader task maps to its designated writer instance
/// regardless of the timing the trace exhibits.
inline CommRelation dataflow_comm(const Dataflow& ddf, const Trace& trace, int writer_task,
                                  int reader_task)
{
    const DataflowEdge* e = ddf.edge(writer_task, reader_task);
    if (!e)
        throw InputError("dataflow has no edge " + std::to_string(writer_task) + " -> " +
                         std::to_string(reader_task));
    CommRelation rel;
    rel.writer_task = writer_task;
    rel.reader_task = reader_task;
    for (const JobRecord& r : trace.by_task[static_cast<std::size_t>(writer_task)])
        if (r.job.task >= 0)
            rel.max_writer_k = std::max(rel.max_writer_k, r.job.k);
    for (const JobRecord& r : trace.by_task[static_cast<std::size_t>(reader_task)]) {
        if (r.job.task < 0)
            continue;
        std::optional<JobId> w = ddf.intended_writer(*e, r.job.k);
        rel.add(r.job.k, w ? std::optional<long long>(w->k) : std::nullopt);
    }
    return rel;
}

inline std::vector<CommRelation> dataflow_relations(const Dataflow& ddf, const Trace& trace,
                                                    const std::vector<Edge>& edges)
{
    std::vector<CommRelation> rels;
    rels.reserve(edges.size());
    for (const Edge& e : edges)
        rels.push_back(dataflow_comm(ddf, trace, e.first, e.second));
    return rels;
}

} // namespace cechain

#endif
