#include "doctest.h"

#include "cechain/runtime.hpp"
#include "test_util.hpp"

using namespace cechain;

TEST_CASE("an all-WCET run reads exactly the frozen dataflow")
{
    System sys = testutil::fig1();
    FramedSystem fsys = treat(sys);
    auto [trace, log] = online_run(fsys.set, ExecPolicy::all_wcet(), 2 * 6000 + 4000 + 1);
    CHECK(log.rfi_ok);
    CHECK(verify_dataflow(log, fsys.set.dataflow));
    CHECK_NOTHROW(require_rfi(log));
    REQUIRE(!log.entries.empty());
    CHECK(log.entries[0].reader == JobId{2, 1});
    CHECK(log.entries[0].intended == JobId{1, 3});
    CHECK(log.entries[0].actual == JobId{1, 3});
    // entries are chronological
    for (std::size_t i = 1; i < log.entries.size(); ++i)
        CHECK(log.entries[i - 1].time <= log.entries[i].time);
}

TEST_CASE("sampled runs of treated systems never break the dataflow")
{
    for (int trial = 0; trial < 6; ++trial) {
        System sys = trial == 0 ? testutil::fig1() : testutil::random_schedulable(trial + 1100, 4);
        FramedSystem fsys = treat(sys);
        dtime_t horizon = 2 * fsys.set.hyperperiod + fsys.set.phase_adj_max() + 1;
        for (int run = 0; run < 50; ++run) {
            auto [trace, log] =
                online_run(fsys.set, ExecPolicy::sampled(mix_key(trial, run)), horizon);
            CHECK(log.rfi_ok);
            CHECK(verify_dataflow(log, fsys.set.dataflow));
            for (const auto& [task, occupancy] : log.max_occupancy)
                CHECK(occupancy <= fsys.set.buffer_size(task));
        }
    }
}

TEST_CASE("an undersized buffer is caught as a read-from-intended violation")
{
    System sys = testutil::two_task_buffer();
    FramedSystem fsys = treat(sys);
    REQUIRE(fsys.set.buffer_size(0) == 2);
    dtime_t horizon = 2 * fsys.set.hyperperiod + fsys.set.phase_adj_max() + 1;

    // correctly sized: clean under boundary and sampled policies
    for (int run = 0; run < 40; ++run) {
        auto [trace, log] = online_run(fsys.set, ExecPolicy::sampled(run), horizon);
        CHECK(log.rfi_ok);
    }

    // forced to one slot, every write shares the initial value's slot: the
    // first reader loses the initial value, the second loses the write it
    // was designated to consume
    std::map<int, long long> undersized{{0, 1}};
    Trace t = simulate(fsys.set, ExecPolicy::all_bcet(), horizon);
    CommLog log = replay_buffers(fsys.set, t, &undersized);
    CHECK(!log.rfi_ok);
    const CommLogEntry* v = log.first_violation();
    REQUIRE(v != nullptr);
    CHECK(v->reader == JobId{1, 1});
    CHECK(v->intended == std::nullopt);
    CHECK(v->actual == JobId{0, 1});
    bool second_lost = false;
    for (const CommLogEntry& e : log.entries)
        if (e.reader == JobId{1, 2})
            second_lost = !e.ok && e.intended == JobId{0, 1} && e.actual == JobId{0, 2};
    CHECK(second_lost);
    CHECK_THROWS_AS(require_rfi(log), PropertyError);
}

TEST_CASE("untreated register communication diverges from the dataflow under variation")
{
    System sys = testutil::fig1();
    Dataflow ddf = extract_dataflow(sys.set, sys.chains);
    // the anomaly witness: the first tau1 job runs at BCET
    ExecPolicy witness = ExecPolicy::explicit_times({{{0, 1}, 500}}, true);
    Trace t = simulate(sys.set, witness, 12000);
    CHECK(!matches_dataflow(register_comm(t, 1, 2), ddf));
    // while the all-WCET register relation does match
    Trace w = simulate(sys.set, ExecPolicy::all_wcet(), 12000);
    CHECK(matches_dataflow(register_comm(w, 1, 2), ddf));
}

TEST_CASE("reaction measurements of treated runs")
{
    System sys = testutil::fig1();
    FramedSystem fsys = treat(sys);
    ScheduleAnalysis wc = analyze_schedule(fsys.set, fsys.chains, ExecPolicy::all_wcet());
    ScheduleAnalysis bc = analyze_schedule(fsys.set, fsys.chains, ExecPolicy::all_bcet());
    dtime_t mrt = wc.per_chain[0].max_length;
    dtime_t mrt_min = bc.per_chain[0].min_length;
    CHECK(mrt == 8000);
    CHECK(mrt_min <= mrt);

    SUBCASE("the all-WCET run reproduces the analysis lengths")
    {
        RunReactions run = run_and_measure(fsys.set, fsys.chains, ExecPolicy::all_wcet());
        REQUIRE(run.per_chain[0].iacs.size() == wc.per_chain[0].iacs.size());
        for (std::size_t i = 0; i < run.per_chain[0].iacs.size(); ++i)
            CHECK(run.per_chain[0].iacs[i].length() == wc.per_chain[0].iacs[i].length());
        CHECK(run.per_chain[0].max_length == mrt);
    }

    SUBCASE("every sampled reaction lies between the boundary analyses")
    {
        for (int run = 0; run < 200; ++run) {
            RunReactions r = run_and_measure(fsys.set, fsys.chains, ExecPolicy::sampled(run));
            CHECK(r.log.rfi_ok);
            for (const Iac& i : r.per_chain[0].iacs) {
                CHECK(i.length() <= mrt);
                CHECK(i.length() >= mrt_min);
            }
        }
    }

    SUBCASE("with BCET = WCET every run repeats the all-WCET lengths")
    {
        std::vector<TaskSpec> tasks = sys.set.tasks;
        for (TaskSpec& t : tasks)
            t.bcet = t.wcet;
        System fixed = make_system(std::move(tasks), sys.chains);
        FramedSystem ffixed = treat(fixed);
        ScheduleAnalysis wfixed = analyze_schedule(ffixed.set, ffixed.chains, ExecPolicy::all_wcet());
        RunReactions r = run_and_measure(ffixed.set, ffixed.chains, ExecPolicy::sampled(99));
        REQUIRE(r.per_chain[0].iacs.size() == wfixed.per_chain[0].iacs.size());
        for (std::size_t i = 0; i < r.per_chain[0].iacs.size(); ++i)
            CHECK(r.per_chain[0].iacs[i].length() == wfixed.per_chain[0].iacs[i].length());
        CHECK(r.per_chain[0].mean_length() ==
              doctest::Approx(wfixed.per_chain[0].mean_length()));
    }
}

TEST_CASE("observed occupancy reaches the planned size when reads straddle hyperperiods")
{
    // under all-BCET the next write lands while the previous one is still
    // awaited, so two tokens are live at once
    System sys = testutil::two_task_buffer();
    FramedSystem fsys = treat(sys);
    auto [trace, log] = online_run(fsys.set, ExecPolicy::all_bcet(),
                                   2 * fsys.set.hyperperiod + fsys.set.phase_adj_max() + 1);
    CHECK(log.rfi_ok);
    CHECK(log.max_occupancy.at(0) == 2);
}

TEST_CASE("job-chain structure is invariant across treated runs")
{
    for (int trial = 0; trial < 4; ++trial) {
        System sys = trial == 0 ? testutil::fig1() : testutil::random_schedulable(trial + 1500, 4);
        FramedSystem fsys = treat(sys);
        ScheduleAnalysis wc = analyze_schedule(fsys.set, fsys.chains, ExecPolicy::all_wcet());
        for (int run = 0; run < 40; ++run) {
            RunReactions r =
                run_and_measure(fsys.set, fsys.chains, ExecPolicy::sampled(mix_key(trial, run)));
            for (std::size_t c = 0; c < fsys.chains.size(); ++c) {
                REQUIRE(r.per_chain[c].iacs.size() == wc.per_chain[c].iacs.size());
                for (std::size_t i = 0; i < r.per_chain[c].iacs.size(); ++i)
                    CHECK(r.per_chain[c].iacs[i].jobs == wc.per_chain[c].iacs[i].jobs);
            }
        }
    }
}
