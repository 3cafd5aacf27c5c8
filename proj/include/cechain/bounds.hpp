#ifndef CECHAIN_BOUNDS_HPP
#define CECHAIN_BOUNDS_HPP

#include <string>
#include <vector>

#include "reaction.hpp"

namespace cechain {

/// Start/finish (and hence read/write) time bounds per job, taken from the
/// two boundary schedules: the all-BCET run gives the lower bounds and the
/// all-WCET run the upper bounds.  Jobs beyond the simulated window are
/// covered by periodic extension of the steady hyperperiod.
class RwBounds {
public:
    RwBounds(Trace wcet_trace, Trace bcet_trace, std::vector<long long> frames_per_task)
        : wcet_(std::move(wcet_trace)), bcet_(std::move(bcet_trace)),
          frames_(std::move(frames_per_task))
    {
        reliable_ = check_schedulability(wcet_).schedulable();
    }

    /// False when the all-WCET run misses a deadline; the bounds then do
    /// not cover all executions.
    bool reliable() const { return reliable_; }

    dtime_t re_min(JobId j) const { return query(bcet_, j, true); }
    dtime_t re_max(JobId j) const { return query(wcet_, j, true); }
    dtime_t we_min(JobId j) const { return query(bcet_, j, false); }
    dtime_t we_max(JobId j) const { return query(wcet_, j, false); }

    const Trace& wcet_trace() const { return wcet_; }
    const Trace& bcet_trace() const { return bcet_; }

private:
    dtime_t query(const Trace& tr, JobId id, bool start_field) const
    {
        const JobRecord* r = tr.find(id);
        if (r && !r->unfinished)
            return start_field ? r->start : r->finish;
        // periodic extension: reduce to the same frame slot in the steady
        // window and shift back by whole hyperperiods
        long long n = frames_[static_cast<std::size_t>(id.task)];
        long long base_k = (id.k - 1) % n + 1;
        const JobRecord* base = nullptr;
        while (base_k <= id.k) {
            const JobRecord* cand = tr.find(JobId{id.task, base_k});
            if (!cand || cand->unfinished)
                break;
            if (cand->release >= tr.steady_start()) {
                base = cand;
                break;
            }
            base_k += n;
        }
        if (!base)
            throw InputError("bounds trace does not cover " + to_string(id));
        long long shift = (id.k - base_k) / n;
        return (start_field ? base->start : base->finish) + shift * tr.hyperperiod;
    }

    Trace wcet_;
    Trace bcet_;
    std::vector<long long> frames_;
    bool reliable_ = false;
};

namespace detail {

inline std::vector<long long> frames_per_task(const TaskSet& set)
{
    std::vector<long long> n;
    n.reserve(static_cast<std::size_t>(set.size()));
    for (const TaskSpec& t : set.tasks)
        n.push_back(set.hyperperiod / t.period);
    return n;
}

} // namespace detail

/// Bounds for a plain task set under register communication.
inline RwBounds make_rw_bounds(const TaskSet& set)
{
    dtime_t horizon = 2 * set.hyperperiod + set.phase_max + 1;
    return RwBounds(simulate(set, ExecPolicy::all_wcet(), horizon),
                    simulate(set, ExecPolicy::all_bcet(), horizon),
                    detail::frames_per_task(set));
}

/// Bounds for the treated system; the boundary runs include the dataflow
/// eligibility blocking, so they bound every treated execution.
inline RwBounds make_rw_bounds(const FramedTaskSet& fset)
{
    dtime_t horizon = 2 * fset.hyperperiod + fset.phase_adj_max() + 1;
    return RwBounds(simulate(fset, ExecPolicy::all_wcet(), horizon),
                    simulate(fset, ExecPolicy::all_bcet(), horizon),
                    detail::frames_per_task(fset.base));
}

} // namespace cechain

#endif
