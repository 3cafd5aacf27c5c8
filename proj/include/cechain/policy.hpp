#ifndef CECHAIN_POLICY_HPP
#define CECHAIN_POLICY_HPP

#include <map>
#include <string>

#include "model.hpp"
#include "rng.hpp"

namespace cechain {

/// Assigns every job an execution time within its task's [BCET, WCET].
///
/// AllWcet / AllBcet realize the two schedules bounding all others.
/// Explicit carries a per-job table (optionally falling back to WCET for
/// unlisted jobs); Sampled draws per job, deterministically from the seed.
class ExecPolicy {
public:
    enum class Kind { AllWcet, AllBcet, Explicit, Sampled };

    static ExecPolicy all_wcet() { return ExecPolicy(Kind::AllWcet); }
    static ExecPolicy all_bcet() { return ExecPolicy(Kind::AllBcet); }

    static ExecPolicy explicit_times(std::map<JobId, dtime_t> table, bool wcet_default = false)
    {
        ExecPolicy p(Kind::Explicit);
        p.table_ = std::move(table);
        p.wcet_default_ = wcet_default;
        return p;
    }

    static ExecPolicy sampled(std::uint64_t seed)
    {
        ExecPolicy p(Kind::Sampled);
        p.seed_ = seed;
        return p;
    }

    Kind kind() const { return kind_; }

    dtime_t exec_time(const TaskSpec& task, long long k) const
    {
        dtime_t e = 0;
        switch (kind_) {
        case Kind::AllWcet:
            return task.wcet;
        case Kind::AllBcet:
            return task.bcet;
        case Kind::Explicit: {
            auto it = table_.find(JobId{task.id, k});
            if (it != table_.end())
                e = it->second;
            else if (wcet_default_)
                return task.wcet;
            else
                throw InputError("explicit policy has no execution time for " +
                                 to_string(JobId{task.id, k}));
            break;
        }
        case Kind::Sampled: {
            std::uint64_t key = mix_key(seed_, mix_key(static_cast<std::uint64_t>(task.id) + 1,
                                                       static_cast<std::uint64_t>(k)));
            e = task.bcet + static_cast<dtime_t>(
                                key % static_cast<std::uint64_t>(task.wcet - task.bcet + 1));
            break;
        }
        }
        if (e < task.bcet || e > task.wcet)
            throw InputError("execution time for " + to_string(JobId{task.id, k}) +
                             " outside [BCET, WCET]");
        return e;
    }

    std::string describe() const
    {
        switch (kind_) {
        case Kind::AllWcet: return "all-wcet";
        case Kind::AllBcet: return "all-bcet";
        case Kind::Explicit: return "explicit[" + std::to_string(table_.size()) + "]";
        case Kind::Sampled: return "sampled[" + std::to_string(seed_) + "]";
        }
        return {};
    }

    const std::map<JobId, dtime_t>& table() const { return table_; }

private:
    explicit ExecPolicy(Kind kind) : kind_(kind) {}

    Kind kind_;
    std::map<JobId, dtime_t> table_;
    bool wcet_default_ = false;
    std::uint64_t seed_ = 0;
};

} // namespace cechain

#endif
