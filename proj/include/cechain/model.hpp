#ifndef CECHAIN_MODEL_HPP
#define CECHAIN_MODEL_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cechain {

// Discrete time.  Every timestamp and duration in the schedule kernel is an
// integer number of ticks; the tick unit itself is declared alongside the
// task set and only matters for I/O.
using dtime_t = long long;

constexpr dtime_t kNoTime = -1;

struct TickUnit {
    long long ns_per_tick = 1000; // default: 1 tick = 1 us

    friend bool operator==(const TickUnit&, const TickUnit&) = default;
};

// Thrown when an input (task set, chain, file, config) is malformed.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an input is well-formed but the requested operation cannot be
// carried out on it (e.g. transforming an unschedulable system).
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a run violates a guaranteed property (e.g. a buffer read
// returning data from the wrong producer).
class PropertyError : public std::runtime_error {
public:
    explicit PropertyError(const std::string& what) : std::runtime_error(what) {}
};

/// A periodic task: period, phase, execution-time interval and a fixed
/// base priority (larger value = higher priority).
struct TaskSpec {
    int id = 0;
    dtime_t period = 0;
    dtime_t phase = 0;
    dtime_t bcet = 0;
    dtime_t wcet = 0;
    int priority = 0;

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Identifies the k-th job of a task; k is 1-based.
struct JobId {
    int task = -1;
    long long k = 0;

    auto operator<=>(const JobId&) const = default;
};

inline std::string to_string(const JobId& j)
{
    return "J" + std::to_string(j.task) + "^" + std::to_string(j.k);
}

/// Release time of the k-th job (k >= 1) of a task.
inline dtime_t job_release(const TaskSpec& task, long long k)
{
    if (k < 1)
        throw InputError("job index must be >= 1");
    return task.phase + (k - 1) * task.period;
}

namespace detail {

inline dtime_t checked_lcm(dtime_t a, dtime_t b)
{
    dtime_t g = std::gcd(a, b);
    dtime_t q = a / g;
    if (q > (std::numeric_limits<dtime_t>::max)() / b)
        throw InputError("hyperperiod overflows 64-bit tick range");
    return q * b;
}

// Floor division / modulo for hyperperiod-offset arithmetic (delta < 0).
inline long long floor_div(long long a, long long b)
{
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

inline long long floor_mod(long long a, long long b)
{
    long long m = a % b;
    if (m != 0 && ((m < 0) != (b < 0)))
        m += b;
    return m;
}

} // namespace detail

/// A validated task set with derived hyperperiod and maximum phase.
struct TaskSet {
    std::vector<TaskSpec> tasks; // indexed by task id (ids dense from 0)
    dtime_t hyperperiod = 0;
    dtime_t phase_max = 0;

    const TaskSpec& task(int id) const
    {
        if (id < 0 || static_cast<std::size_t>(id) >= tasks.size())
            throw InputError("unknown task id " + std::to_string(id));
        return tasks[static_cast<std::size_t>(id)];
    }

    int size() const { return static_cast<int>(tasks.size()); }

    /// Number of jobs of a task per hyperperiod.
    long long frames_of(int id) const { return hyperperiod / task(id).period; }

    friend bool operator==(const TaskSet&, const TaskSet&) = default;
};

/// Checks all task invariants and computes the derived quantities.
inline TaskSet validate_task_set(std::vector<TaskSpec> tasks)
{
    if (tasks.empty())
        throw InputError("task set is empty");
    std::sort(tasks.begin(), tasks.end(),
              [](const TaskSpec& a, const TaskSpec& b) { return a.id < b.id; });
    TaskSet out;
    out.hyperperiod = 1;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const TaskSpec& t = tasks[i];
        const std::string name = "task " + std::to_string(t.id);
        if (i > 0 && tasks[i - 1].id == t.id)
            throw InputError("duplicate task id " + std::to_string(t.id));
        if (t.id != static_cast<int>(i))
            throw InputError(name + ": ids must be dense from 0");
        if (t.period <= 0)
            throw InputError(name + ": period must be positive");
        if (t.phase < 0)
            throw InputError(name + ": phase must be non-negative");
        if (t.bcet <= 0)
            throw InputError(name + ": BCET must be positive");
        if (t.bcet > t.wcet)
            throw InputError(name + ": BCET exceeds WCET");
        if (t.wcet > t.period)
            throw InputError(name + ": WCET exceeds period (implicit deadline)");
        out.hyperperiod = detail::checked_lcm(out.hyperperiod, t.period);
        out.phase_max = std::max(out.phase_max, t.phase);
    }
    out.tasks = std::move(tasks);
    return out;
}

/// Total utilization of a set of tasks, summed exactly over a common period
/// multiple so the value does not depend on summation order.
inline double utilization(const std::vector<TaskSpec>& tasks)
{
    dtime_t l = 1;
    for (const TaskSpec& t : tasks)
        l = detail::checked_lcm(l, t.period);
    long long num = 0;
    for (const TaskSpec& t : tasks)
        num += t.wcet * (l / t.period);
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(l));
}

inline double utilization(const TaskSet& set) { return utilization(set.tasks); }

/// A cause-effect chain: an ordered list of distinct task ids.  Data flows
/// from each task to the next.
struct Chain {
    std::vector<int> tasks;

    int length() const { return static_cast<int>(tasks.size()); }
    int head() const { return tasks.front(); }

    friend bool operator==(const Chain&, const Chain&) = default;
};

using Edge = std::pair<int, int>; // writer task -> reader task

/// Distinct task-level edges induced by a set of chains, in deterministic
/// order.
inline std::vector<Edge> graph_edges(const std::vector<Chain>& chains)
{
    std::set<Edge> edges;
    for (const Chain& c : chains)
        for (std::size_t i = 0; i + 1 < c.tasks.size(); ++i)
            edges.insert({c.tasks[i], c.tasks[i + 1]});
    return {edges.begin(), edges.end()};
}

/// Validates chains against a task set: tasks exist, no repeats inside one
/// chain, and the union graph is acyclic.
inline void validate_chains(const TaskSet& set, const std::vector<Chain>& chains)
{
    for (const Chain& c : chains) {
        if (c.tasks.empty())
            throw InputError("empty chain");
        std::set<int> seen;
        for (int t : c.tasks) {
            set.task(t);
            if (!seen.insert(t).second)
                throw InputError("task " + std::to_string(t) + " repeats within a chain");
        }
    }
    // Kahn's algorithm on the union graph.
    auto edges = graph_edges(chains);
    std::map<int, int> indeg;
    std::map<int, std::vector<int>> next;
    for (const auto& [w, r] : edges) {
        indeg.try_emplace(w, 0);
        ++indeg[r];
        next[w].push_back(r);
    }
    std::vector<int> ready;
    for (const auto& [n, d] : indeg)
        if (d == 0)
            ready.push_back(n);
    std::size_t visited = 0;
    while (!ready.empty()) {
        int n = ready.back();
        ready.pop_back();
        ++visited;
        for (int m : next[n])
            if (--indeg[m] == 0)
                ready.push_back(m);
    }
    if (visited != indeg.size())
        throw InputError("cause-effect graph contains a cycle");
}

/// A complete analysis input: task set plus its cause-effect chains.
struct System {
    TickUnit tick;
    TaskSet set;
    std::vector<Chain> chains;

    friend bool operator==(const System&, const System&) = default;
};

inline System make_system(std::vector<TaskSpec> tasks, std::vector<Chain> chains,
                          TickUnit tick = {})
{
    System sys;
    sys.tick = tick;
    sys.set = validate_task_set(std::move(tasks));
    validate_chains(sys.set, chains);
    sys.chains = std::move(chains);
    return sys;
}

} // namespace cechain

#endif
