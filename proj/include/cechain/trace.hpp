#ifndef CECHAIN_TRACE_HPP
#define CECHAIN_TRACE_HPP

#include <string>
#include <utility>
#include <vector>

#include "model.hpp"

namespace cechain {

/// Observed lifetime of one job in a simulated schedule.
struct JobRecord {
    JobId job;
    int frame = -1;            // frame id when simulated from a framed set
    dtime_t release = 0;       // actual release (adjusted phase for frames)
    dtime_t deadline = 0;      // original release + original period
    dtime_t start = kNoTime;
    dtime_t finish = kNoTime;
    dtime_t exec = 0;
    std::vector<std::pair<dtime_t, dtime_t>> preempted; // [out, back-in)
    bool deadline_miss = false;
    bool unfinished = false;   // only when an overloaded run hits the cap

    friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

// Implicit communication: a job reads all inputs when it starts and
// publishes its output when it finishes.  The head task of a chain samples
// the external event at its release instead.
inline dtime_t read_event(const JobRecord& r, bool head_task = false)
{
    return head_task ? r.release : r.start;
}

inline dtime_t write_event(const JobRecord& r) { return r.finish; }

/// Deterministic record of one simulated schedule.  Records cover at least
/// every job released before the horizon; jobs released later that finished
/// while the simulation drained are kept as well (their records are exact).
struct Trace {
    std::string policy;
    dtime_t horizon = 0;
    dtime_t hyperperiod = 0;
    dtime_t phase_max = 0;     // max adjusted phase of the simulated set
    bool framed = false;
    std::vector<std::vector<JobRecord>> by_task; // [task][k-1], k dense from 1

    const JobRecord* find(JobId id) const
    {
        if (id.task < 0 || static_cast<std::size_t>(id.task) >= by_task.size() || id.k < 1)
            return nullptr;
        const auto& row = by_task[static_cast<std::size_t>(id.task)];
        if (static_cast<std::size_t>(id.k) > row.size())
            return nullptr;
        const JobRecord* r = &row[static_cast<std::size_t>(id.k - 1)];
        return r->job.task < 0 ? nullptr : r; // gap left by an out-of-order release
    }

    const JobRecord& at(JobId id) const
    {
        const JobRecord* r = find(id);
        if (!r)
            throw InputError("trace has no record for " + to_string(id));
        return *r;
    }

    long long job_count() const
    {
        long long n = 0;
        for (const auto& row : by_task)
            n += static_cast<long long>(row.size());
        return n;
    }

    /// End of the transient: the schedule repeats with the hyperperiod from
    /// here on (for the two boundary policies).
    dtime_t steady_start() const { return hyperperiod + phase_max; }

    friend bool operator==(const Trace&, const Trace&) = default;
};

struct SchedulabilityReport {
    std::vector<JobId> misses; // jobs finishing after their deadline
    bool schedulable() const { return misses.empty(); }
};

/// Lists every recorded job that finished past its deadline.  On an
/// all-WCET trace covering [0, 2H + O_max] this is conclusive: the schedule
/// repeats beyond the window.
inline SchedulabilityReport check_schedulability(const Trace& trace)
{
    SchedulabilityReport rep;
    for (const auto& row : trace.by_task)
        for (const JobRecord& r : row)
            if (r.deadline_miss)
                rep.misses.push_back(r.job);
    return rep;
}

} // namespace cechain

#endif
