#ifndef CECHAIN_SIM_HPP
#define CECHAIN_SIM_HPP

#include <algorithm>
#include <queue>
#include <vector>

#include "frames.hpp"
#include "policy.hpp"
#include "trace.hpp"

namespace cechain {

struct SimLimits {
    // Overload guard: a run is cut off this many hyperperiods past the point
    // where it should have drained; still-running jobs are flagged.
    long long cap_hyperperiods = 16;
};

namespace detail {

// One job source: a plain task, or one frame of a framed task.  Instance n
// of a frame keeps the original job identity k = n * stride + offset + 1.
struct SimEntity {
    int task = -1;
    int frame = -1;
    int priority = 0;
    dtime_t first_release = 0; // adjusted phase for frames
    dtime_t orig_first = 0;    // original phase (anchors the deadline)
    dtime_t period = 0;        // hyperperiod for frames
    dtime_t deadline_rel = 0;  // original task period
    long long k_stride = 1;
    long long k_offset = 0;
    const std::vector<ReadBinding>* reads = nullptr;
};

struct ReleaseEvent {
    dtime_t time;
    int entity;
    long long n;

    bool operator>(const ReleaseEvent& o) const
    {
        if (time != o.time)
            return time > o.time;
        if (entity != o.entity)
            return entity > o.entity;
        return n > o.n;
    }
};

struct ActiveJob {
    int entity;
    long long n;
    JobId job;
    dtime_t remaining;
    std::vector<JobId> blockers;
    bool started = false;
};

inline Trace run_simulation(const TaskSet& base, const std::vector<SimEntity>& entities,
                            const Dataflow* dataflow, const ExecPolicy& policy,
                            dtime_t horizon, dtime_t hyperperiod, dtime_t phase_max,
                            bool framed, SimLimits limits)
{
    Trace trace;
    trace.policy = policy.describe();
    trace.horizon = horizon;
    trace.hyperperiod = hyperperiod;
    trace.phase_max = phase_max;
    trace.framed = framed;
    trace.by_task.resize(static_cast<std::size_t>(base.size()));

    // Everything released before this bound is run to completion, so every
    // kept task row is dense in k even when adjusted phases reorder releases.
    const dtime_t drain_bound = horizon + phase_max + 1;
    const dtime_t cap_time = drain_bound + limits.cap_hyperperiods * (hyperperiod + phase_max + 1);

    auto record_of = [&trace](JobId id) -> JobRecord& {
        auto& row = trace.by_task[static_cast<std::size_t>(id.task)];
        if (static_cast<std::size_t>(id.k) > row.size())
            row.resize(static_cast<std::size_t>(id.k));
        return row[static_cast<std::size_t>(id.k - 1)];
    };

    std::priority_queue<ReleaseEvent, std::vector<ReleaseEvent>, std::greater<>> releases;
    for (std::size_t i = 0; i < entities.size(); ++i)
        releases.push({entities[i].first_release, static_cast<int>(i), 0});

    std::vector<ActiveJob> ready;
    long long pending_needed = 0; // unfinished jobs with release < drain_bound

    auto is_finished = [&trace](JobId id) {
        const JobRecord* r = trace.find(id);
        return r && r->finish != kNoTime;
    };

    auto pick = [&]() -> int {
        int best = -1;
        for (std::size_t i = 0; i < ready.size(); ++i) {
            const ActiveJob& a = ready[i];
            bool eligible = true;
            for (const JobId& b : a.blockers)
                if (!is_finished(b)) {
                    eligible = false;
                    break;
                }
            if (!eligible)
                continue;
            if (best < 0) {
                best = static_cast<int>(i);
                continue;
            }
            const ActiveJob& c = ready[static_cast<std::size_t>(best)];
            const SimEntity& ea = entities[static_cast<std::size_t>(a.entity)];
            const SimEntity& ec = entities[static_cast<std::size_t>(c.entity)];
            if (ea.priority != ec.priority ? ea.priority > ec.priority
                : a.job.task != c.job.task ? a.job.task < c.job.task
                                           : a.job.k < c.job.k)
                best = static_cast<int>(i);
        }
        return best;
    };

    dtime_t now = 0;
    int running = -1; // index into ready

    while (true) {
        // admit all releases due by now
        while (!releases.empty() && releases.top().time <= now) {
            ReleaseEvent ev = releases.top();
            releases.pop();
            const SimEntity& e = entities[static_cast<std::size_t>(ev.entity)];
            JobId id{e.task, ev.n * e.k_stride + e.k_offset + 1};

            ActiveJob a;
            a.entity = ev.entity;
            a.n = ev.n;
            a.job = id;
            a.remaining = policy.exec_time(base.task(e.task), id.k);
            if (e.reads && dataflow) {
                long long nw;
                for (const ReadBinding& rb : *e.reads) {
                    nw = dataflow->frames_per_task[static_cast<std::size_t>(rb.writer_task)];
                    long long wk = (ev.n + rb.delta) * nw + rb.writer_frame + 1;
                    if (wk >= 1)
                        a.blockers.push_back(JobId{rb.writer_task, wk});
                }
            }

            JobRecord& rec = record_of(id);
            rec.job = id;
            rec.frame = e.frame;
            rec.release = ev.time;
            rec.deadline = e.orig_first + ev.n * e.period + e.deadline_rel;
            rec.exec = a.remaining;
            if (ev.time < drain_bound)
                ++pending_needed;
            ready.push_back(std::move(a));

            releases.push({e.first_release + (ev.n + 1) * e.period, ev.entity, ev.n + 1});
        }

        if (pending_needed == 0 && now >= drain_bound)
            break;

        if (now > cap_time) {
            // overloaded run: flag whatever is still in flight
            for (const ActiveJob& a : ready) {
                JobRecord& rec = record_of(a.job);
                rec.unfinished = true;
                rec.deadline_miss = true;
                if (!rec.preempted.empty() && rec.preempted.back().second == kNoTime)
                    rec.preempted.back().second = now;
            }
            break;
        }

        int best = pick();
        if (best != running && running >= 0 && running < static_cast<int>(ready.size())) {
            // the previously running job was preempted (or just finished and
            // was removed; that case never reaches here)
            JobRecord& rec = record_of(ready[static_cast<std::size_t>(running)].job);
            rec.preempted.push_back({now, kNoTime});
        }
        if (best >= 0) {
            ActiveJob& a = ready[static_cast<std::size_t>(best)];
            JobRecord& rec = record_of(a.job);
            if (!a.started) {
                a.started = true;
                rec.start = now;
            } else if (best != running && !rec.preempted.empty() &&
                       rec.preempted.back().second == kNoTime) {
                rec.preempted.back().second = now;
            }
        }
        running = best;

        dtime_t next = releases.empty() ? cap_time + 1 : releases.top().time;
        if (running >= 0) {
            ActiveJob& a = ready[static_cast<std::size_t>(running)];
            dtime_t done_at = now + a.remaining;
            if (done_at <= next) {
                // run to completion
                a.remaining = 0;
                now = done_at;
                JobRecord& rec = record_of(a.job);
                rec.finish = now;
                rec.deadline_miss = now > rec.deadline;
                if (rec.release < drain_bound)
                    --pending_needed;
                ready.erase(ready.begin() + running);
                running = -1;
                continue;
            }
            a.remaining -= next - now;
        }
        now = next;
    }

    // Anything not run to completion (in-flight extras past the drain bound,
    // gaps left by out-of-order releases) is marked incomplete.
    for (auto& row : trace.by_task)
        for (JobRecord& rec : row)
            if (rec.finish == kNoTime)
                rec.unfinished = true;

    return trace;
}

} // namespace detail

/// Simulates time-triggered fixed-priority preemptive scheduling of a plain
/// task set.  Deterministic; runs past the horizon until every job released
/// before it has finished.
inline Trace simulate(const TaskSet& set, const ExecPolicy& policy, dtime_t horizon,
                      SimLimits limits = {})
{
    std::vector<detail::SimEntity> ents;
    ents.reserve(static_cast<std::size_t>(set.size()));
    for (const TaskSpec& t : set.tasks) {
        detail::SimEntity e;
        e.task = t.id;
        e.priority = t.priority;
        e.first_release = t.phase;
        e.orig_first = t.phase;
        e.period = t.period;
        e.deadline_rel = t.period;
        ents.push_back(e);
    }
    return detail::run_simulation(set, ents, nullptr, policy, horizon, set.hyperperiod,
                                  set.phase_max, false, limits);
}

/// Simulates the treated system: frame releases use the adjusted phases and
/// a frame job becomes eligible only once all its dataflow writers have
/// finished.  Records keep original job identities.
inline Trace simulate(const FramedTaskSet& fset, const ExecPolicy& policy, dtime_t horizon,
                      SimLimits limits = {})
{
    std::vector<detail::SimEntity> ents;
    for (const TaskSpec& t : fset.base.tasks) {
        long long stride = static_cast<long long>(fset.frames[static_cast<std::size_t>(t.id)].size());
        for (const Frame& f : fset.frames[static_cast<std::size_t>(t.id)]) {
            detail::SimEntity e;
            e.task = t.id;
            e.frame = f.id;
            e.priority = t.priority;
            e.first_release = f.phase_adj;
            e.orig_first = f.phase;
            e.period = fset.hyperperiod;
            e.deadline_rel = t.period;
            e.k_stride = stride;
            e.k_offset = f.id;
            e.reads = &f.reads;
            ents.push_back(e);
        }
    }
    return detail::run_simulation(fset.base, ents, &fset.dataflow, policy, horizon,
                                  fset.hyperperiod, fset.phase_adj_max(), true, limits);
}

} // namespace cechain

#endif
