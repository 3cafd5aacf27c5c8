#ifndef CECHAIN_FRAMES_HPP
#define CECHAIN_FRAMES_HPP

#include <map>
#include <optional>
#include <vector>

#include "model.hpp"

namespace cechain {

// The job-level communication relation frozen from the all-WCET schedule.
// Per edge it maps every reader frame (job index modulo the reader's
// frames-per-hyperperiod count) to a writer frame plus a hyperperiod offset
// delta: reader instance in hyperperiod n reads the writer frame's instance
// in hyperperiod n + delta.

struct FrameRef {
    int frame = 0;
    int delta = 0; // hyperperiod offset, usually 0 or -1

    friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

struct DataflowEdge {
    int writer = -1;
    int reader = -1;
    std::vector<FrameRef> writer_of; // indexed by reader frame id

    friend bool operator==(const DataflowEdge&, const DataflowEdge&) = default;
};

struct Dataflow {
    dtime_t hyperperiod = 0;
    std::vector<long long> frames_per_task;
    std::vector<DataflowEdge> edges; // deterministic (writer, reader) order

    const DataflowEdge* edge(int writer, int reader) const
    {
        for (const DataflowEdge& e : edges)
            if (e.writer == writer && e.reader == reader)
                return &e;
        return nullptr;
    }

    /// Concrete writer job read by reader job (task, k).  Empty when the
    /// unrolled writer instance would lie before time zero (the reader sees
    /// the initial value instead).
    std::optional<JobId> intended_writer(const DataflowEdge& e, long long reader_k) const
    {
        long long nr = frames_per_task[static_cast<std::size_t>(e.reader)];
        long long nw = frames_per_task[static_cast<std::size_t>(e.writer)];
        long long j0 = reader_k - 1;
        const FrameRef& ref = e.writer_of[static_cast<std::size_t>(j0 % nr)];
        long long hp = j0 / nr + ref.delta;
        if (hp < 0)
            return std::nullopt;
        return JobId{e.writer, hp * nw + ref.frame + 1};
    }

    friend bool operator==(const Dataflow&, const Dataflow&) = default;
};

/// One incoming edge of a reader frame: which writer frame feeds it.
struct ReadBinding {
    int writer_task = -1;
    int writer_frame = 0;
    int delta = 0;

    friend bool operator==(const ReadBinding&, const ReadBinding&) = default;
};

/// Per-hyperperiod job of one task, carried as a row of the task's frame
/// table: original phase, adjusted phase, and its dataflow writers.
struct Frame {
    int id = 0;              // 0-based index within the hyperperiod
    dtime_t phase = 0;       // T(ort) * id + O(ort)
    dtime_t phase_adj = 0;   // release never precedes any writer's release
    std::vector<ReadBinding> reads;

    friend bool operator==(const Frame&, const Frame&) = default;
};

/// The treated task set: per-task frame tables over one hyperperiod, the
/// dataflow they realize, and the buffer plan for multi-buffer
/// communication.  Frame instances keep the original job identity: frame j
/// of task i in hyperperiod n is job J_i^{n*N_i + j + 1}.
struct FramedTaskSet {
    TaskSet base;
    dtime_t hyperperiod = 0;
    std::vector<std::vector<Frame>> frames;  // indexed by task id
    Dataflow dataflow;
    std::map<int, long long> buffer_sizes;   // writer task -> slot count

    dtime_t phase_adj_max() const
    {
        dtime_t m = 0;
        for (const auto& table : frames)
            for (const Frame& f : table)
                m = std::max(m, f.phase_adj);
        return m;
    }

    long long buffer_size(int writer_task) const
    {
        auto it = buffer_sizes.find(writer_task);
        return it == buffer_sizes.end() ? 0 : it->second;
    }

    /// Buffer slot written by the l-th (1-based) job of a writer task.
    /// Slots rotate with the global job index so that consecutive live
    /// writes always land in distinct slots.
    long long write_slot(int writer_task, long long k) const
    {
        long long bs = buffer_size(writer_task);
        return bs > 0 ? detail::floor_mod(k - 1, bs) : 0;
    }

    friend bool operator==(const FramedTaskSet&, const FramedTaskSet&) = default;
};

/// A treated system: framed task set plus the chains it was built for.
struct FramedSystem {
    TickUnit tick;
    FramedTaskSet set;
    std::vector<Chain> chains;

    friend bool operator==(const FramedSystem&, const FramedSystem&) = default;
};

} // namespace cechain

#endif
