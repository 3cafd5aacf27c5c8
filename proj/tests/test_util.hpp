#ifndef CECHAIN_TEST_UTIL_HPP
#define CECHAIN_TEST_UTIL_HPP

#include "cechain/dataflow.hpp"
#include "cechain/rng.hpp"

namespace testutil {

// The three-task running example: tau2 -> tau3 chain disturbed by tau1.
// Ticks are microseconds, so 0.5 ms = 500.
inline cechain::System fig1()
{
    using namespace cechain;
    std::vector<TaskSpec> tasks = {
        {0, 6000, 0, 500, 2500, 2}, // tau1
        {1, 2000, 0, 500, 1000, 3}, // tau2
        {2, 6000, 0, 500, 500, 1},  // tau3
    };
    return make_system(std::move(tasks), {Chain{{1, 2}}});
}

// Two-task producer/consumer whose steady reader consumes the previous
// hyperperiod's write; computed buffer need is 2 slots.
inline cechain::System two_task_buffer()
{
    using namespace cechain;
    std::vector<TaskSpec> tasks = {
        {0, 10, 0, 1, 4, 1}, // writer
        {1, 10, 2, 1, 1, 2}, // reader
    };
    return make_system(std::move(tasks), {Chain{{0, 1}}});
}

// Small random systems over harmonic periods (rate-monotonic priorities,
// utilization kept under 1), occasionally with phases.  Harmonic sets stay
// schedulable, which keeps property tests fast.
inline cechain::System random_system(std::uint64_t seed, int max_tasks = 4,
                                     bool with_phases = false)
{
    using namespace cechain;
    Rng rng(mix_key(seed, 0x7465737473ULL));
    const dtime_t periods[] = {100, 200, 400, 800};
    int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_tasks - 1)));
    std::vector<TaskSpec> tasks;
    double util = 0;
    for (int i = 0; i < n; ++i) {
        TaskSpec t;
        t.id = i;
        t.period = periods[rng.below(4)];
        double budget = 0.95 - util;
        if (budget < 0.02)
            break;
        double u = 0.05 + rng.real() * std::min(0.4, budget - 0.01);
        t.wcet = std::max<dtime_t>(1, static_cast<dtime_t>(u * static_cast<double>(t.period)));
        t.bcet = std::max<dtime_t>(1, t.wcet / (1 + static_cast<dtime_t>(rng.below(4))));
        t.phase = with_phases ? static_cast<dtime_t>(rng.below(static_cast<std::uint64_t>(t.period / 2 + 1))) : 0;
        util += static_cast<double>(t.wcet) / static_cast<double>(t.period);
        tasks.push_back(t);
    }
    // rate-monotonic priorities, id order breaking ties
    std::vector<std::size_t> order(tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return tasks[a].period < tasks[b].period;
    });
    for (std::size_t r = 0; r < order.size(); ++r)
        tasks[order[r]].priority = static_cast<int>(tasks.size() - r);

    // one chain through two or three distinct tasks, ordered by id
    std::vector<int> ids;
    for (const TaskSpec& t : tasks)
        ids.push_back(t.id);
    for (std::size_t i = ids.size(); i > 1; --i)
        std::swap(ids[i - 1], ids[rng.below(i)]);
    std::size_t len = std::min<std::size_t>(ids.size(), 2 + rng.below(2));
    std::vector<int> chain(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(len));
    std::sort(chain.begin(), chain.end());
    return make_system(std::move(tasks), {cechain::Chain{std::move(chain)}});
}

// A random schedulable system (resamples until the all-WCET run is clean).
inline cechain::System random_schedulable(std::uint64_t seed, int max_tasks = 4,
                                          bool with_phases = false)
{
    using namespace cechain;
    for (std::uint64_t s = seed;; ++s) {
        System sys = random_system(s, max_tasks, with_phases);
        Trace t = simulate(sys.set, ExecPolicy::all_wcet(),
                           2 * sys.set.hyperperiod + sys.set.phase_max + 1);
        if (check_schedulability(t).schedulable())
            return sys;
    }
}

} // namespace testutil

#endif
