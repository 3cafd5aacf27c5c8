#include "doctest.h"

#include <array>

#include "cechain/dataflow.hpp"
#include "cechain/runtime.hpp"
#include "test_util.hpp"

using namespace cechain;

namespace {

void fill_row(Trace& t, int task, const std::vector<std::array<dtime_t, 3>>& jobs)
{
    if (static_cast<std::size_t>(task) >= t.by_task.size())
        t.by_task.resize(static_cast<std::size_t>(task) + 1);
    auto& row = t.by_task[static_cast<std::size_t>(task)];
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        JobRecord r;
        r.job = {task, static_cast<long long>(i + 1)};
        r.release = jobs[i][0];
        r.start = jobs[i][1];
        r.finish = jobs[i][2];
        r.deadline = r.release + 1000000;
        r.exec = r.finish - r.start;
        row.push_back(r);
    }
}

bool same_job_times(const Trace& a, const Trace& b)
{
    if (a.by_task.size() != b.by_task.size())
        return false;
    for (std::size_t task = 0; task < a.by_task.size(); ++task) {
        std::size_t n = std::min(a.by_task[task].size(), b.by_task[task].size());
        for (std::size_t i = 0; i < n; ++i) {
            const JobRecord& ra = a.by_task[task][i];
            const JobRecord& rb = b.by_task[task][i];
            if (ra.job.task < 0 || rb.job.task < 0 || ra.unfinished || rb.unfinished)
                continue;
            if (ra.start != rb.start || ra.finish != rb.finish)
                return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("dataflow extraction on the running example")
{
    System sys = testutil::fig1();
    Dataflow ddf = extract_dataflow(sys.set, sys.chains);
    CHECK(ddf.hyperperiod == 6000);
    CHECK(ddf.frames_per_task == std::vector<long long>{1, 3, 1});
    REQUIRE(ddf.edges.size() == 1);
    const DataflowEdge& e = ddf.edges[0];
    CHECK(e.writer == 1);
    CHECK(e.reader == 2);
    REQUIRE(e.writer_of.size() == 1);
    CHECK(e.writer_of[0] == FrameRef{2, 0}); // tau3 reads tau2's third frame

    // unrolling reproduces the register relation of the all-WCET schedule
    CHECK(ddf.intended_writer(e, 1) == JobId{1, 3});
    CHECK(ddf.intended_writer(e, 2) == JobId{1, 6});
}

TEST_CASE("extraction of a two-task producer/consumer pair")
{
    // writer T=2 high, reader T=4 low, unit execution: the reader starts at
    // 2 ticks into its period and sees the write finishing at the same tick
    System sys = make_system({{0, 2, 0, 1, 1, 2}, {1, 4, 0, 1, 1, 1}}, {Chain{{0, 1}}});
    Dataflow ddf = extract_dataflow(sys.set, sys.chains);
    REQUIRE(ddf.edges.size() == 1);
    CHECK(ddf.frames_per_task == std::vector<long long>{2, 1});
    CHECK(ddf.edges[0].writer_of[0] == FrameRef{0, 0});
}

TEST_CASE("extraction records cross-hyperperiod reads")
{
    System sys = testutil::two_task_buffer();
    Dataflow ddf = extract_dataflow(sys.set, sys.chains);
    REQUIRE(ddf.edges.size() == 1);
    CHECK(ddf.edges[0].writer_of[0] == FrameRef{0, -1});
    CHECK(ddf.intended_writer(ddf.edges[0], 1) == std::nullopt); // before time zero
    CHECK(ddf.intended_writer(ddf.edges[0], 2) == JobId{0, 1});
}

TEST_CASE("extraction rejects unschedulable sets")
{
    System sys = make_system({{0, 2, 0, 1, 1, 2}, {1, 2, 0, 2, 2, 1}}, {Chain{{0, 1}}});
    CHECK_THROWS_AS(extract_dataflow(sys.set, sys.chains), InfeasibleError);
}

TEST_CASE("with BCET = WCET the dataflow equals the unique schedule's relation")
{
    for (int trial = 0; trial < 10; ++trial) {
        System base = testutil::random_schedulable(trial + 300);
        std::vector<TaskSpec> tasks = base.set.tasks;
        for (TaskSpec& t : tasks)
            t.bcet = t.wcet;
        System sys = make_system(std::move(tasks), base.chains);
        Dataflow ddf = extract_dataflow(sys.set, sys.chains);
        Trace t = simulate(sys.set, ExecPolicy::sampled(trial),
                           2 * sys.set.hyperperiod + sys.set.phase_max);
        for (const Edge& e : graph_edges(sys.chains)) {
            CommRelation rel = register_comm(t, e.first, e.second);
            // compare on the steady window, where the frozen relation applies
            CommRelation steady;
            steady.writer_task = rel.writer_task;
            steady.reader_task = rel.reader_task;
            for (const auto& [rk, wk] : rel.writer_of)
                if (t.at(JobId{e.second, rk}).release >= t.steady_start())
                    steady.add(rk, wk);
            CHECK(matches_dataflow(steady, ddf));
        }
    }
}

TEST_CASE("frame tables of the treated running example")
{
    System sys = testutil::fig1();
    FramedSystem fsys = treat(sys);
    const FramedTaskSet& fs = fsys.set;

    CHECK(fs.hyperperiod == 6000);
    REQUIRE(fs.frames.size() == 3);
    CHECK(fs.frames[0].size() == 1);
    CHECK(fs.frames[1].size() == 3);
    CHECK(fs.frames[2].size() == 1);

    // phases follow T * id + O
    CHECK(fs.frames[1][0].phase == 0);
    CHECK(fs.frames[1][1].phase == 2000);
    CHECK(fs.frames[1][2].phase == 4000);

    // the reader frame's release is pushed to its writer's release
    CHECK(fs.frames[2][0].phase == 0);
    CHECK(fs.frames[2][0].phase_adj == 4000);
    CHECK(fs.frames[2][0].reads == std::vector<ReadBinding>{{1, 2, 0}});

    // untouched tasks keep their phases
    CHECK(fs.frames[0][0].phase_adj == 0);
    CHECK(fs.frames[1][2].phase_adj == 4000);

    // single reader consuming the same-window write: one slot suffices
    CHECK(fs.buffer_sizes == std::map<int, long long>{{1, 1}});
}

TEST_CASE("adjusted phases never precede a writer's release")
{
    for (int trial = 0; trial < 12; ++trial) {
        System sys = testutil::random_schedulable(trial + 900, 5, trial % 2 == 0);
        FramedSystem fsys = treat(sys);
        for (const auto& table : fsys.set.frames)
            for (const Frame& f : table) {
                CHECK(f.phase_adj >= f.phase);
                if (f.reads.empty())
                    CHECK(f.phase_adj == f.phase);
                for (const ReadBinding& rb : f.reads) {
                    const Frame& wf = fsys.set.frames[static_cast<std::size_t>(rb.writer_task)]
                                                     [static_cast<std::size_t>(rb.writer_frame)];
                    CHECK(f.phase_adj >= wf.phase_adj + rb.delta * fsys.set.hyperperiod);
                }
            }
    }
}

TEST_CASE("frame releases with original phases partition the task's releases")
{
    System sys = testutil::random_schedulable(42, 5);
    FramedSystem fsys = treat(sys);
    for (const TaskSpec& t : sys.set.tasks) {
        std::vector<dtime_t> expected, got;
        for (long long k = 1; k <= 2 * sys.set.frames_of(t.id); ++k)
            expected.push_back(job_release(t, k));
        for (long long n = 0; n < 2; ++n)
            for (const Frame& f : fsys.set.frames[static_cast<std::size_t>(t.id)])
                got.push_back(f.phase + n * fsys.set.hyperperiod);
        std::sort(got.begin(), got.end());
        CHECK(got == expected);
    }
}

TEST_CASE("treatment leaves the all-WCET schedule untouched")
{
    System figs = testutil::fig1();
    FramedSystem ftreat = treat(figs);
    dtime_t h = 2 * figs.set.hyperperiod + 1;
    CHECK(same_job_times(simulate(figs.set, ExecPolicy::all_wcet(), h),
                         simulate(ftreat.set, ExecPolicy::all_wcet(), h)));

    for (int trial = 0; trial < 10; ++trial) {
        System sys = testutil::random_schedulable(trial + 500, 5);
        FramedSystem fsys = treat(sys);
        dtime_t horizon = 2 * sys.set.hyperperiod + sys.set.phase_max + 1;
        Trace orig = simulate(sys.set, ExecPolicy::all_wcet(), horizon);
        Trace framed = simulate(fsys.set, ExecPolicy::all_wcet(), horizon);
        CHECK(same_job_times(orig, framed));
        CHECK(check_schedulability(framed).schedulable());
    }
}

TEST_CASE("the treated all-WCET register relation reproduces the dataflow")
{
    for (int trial = 0; trial < 10; ++trial) {
        System sys = testutil::random_schedulable(trial + 700, 4);
        FramedSystem fsys = treat(sys);
        Trace t = simulate(fsys.set, ExecPolicy::all_wcet(),
                           2 * fsys.set.hyperperiod + fsys.set.phase_adj_max() + 1);
        for (const Edge& e : graph_edges(sys.chains))
            CHECK(matches_dataflow(register_comm(t, e.first, e.second), fsys.set.dataflow));
    }
}

TEST_CASE("readers never start before their dataflow writers finish")
{
    System sys = testutil::fig1();
    FramedSystem fsys = treat(sys);
    for (int run = 0; run < 300; ++run) {
        Trace t = simulate(fsys.set, ExecPolicy::sampled(run), 2 * fsys.set.hyperperiod + 1);
        for (const auto& row : t.by_task)
            for (const JobRecord& r : row) {
                if (r.job.task < 0 || r.unfinished || r.frame < 0)
                    continue;
                const Frame& f = fsys.set.frames[static_cast<std::size_t>(r.job.task)]
                                                [static_cast<std::size_t>(r.frame)];
                long long n = (r.job.k - 1) / static_cast<long long>(
                                                  fsys.set.frames[static_cast<std::size_t>(r.job.task)].size());
                for (const ReadBinding& rb : f.reads) {
                    long long nw = fsys.set.dataflow.frames_per_task[static_cast<std::size_t>(rb.writer_task)];
                    long long wk = (n + rb.delta) * nw + rb.writer_frame + 1;
                    if (wk < 1)
                        continue;
                    const JobRecord* w = t.find({rb.writer_task, wk});
                    if (w && !w->unfinished)
                        CHECK(r.start >= w->finish);
                }
            }
    }
}

TEST_CASE("buffer sizing from hand-built bounds")
{
    // writer T=1 (4 frames per hyperperiod of 4), reader T=4 (1 frame)
    std::vector<TaskSpec> tasks = {{0, 1, 0, 1, 1, 2}, {1, 4, 0, 1, 1, 1}};
    FramedTaskSet fs;
    fs.base = validate_task_set(tasks);
    fs.hyperperiod = 4;
    fs.dataflow.hyperperiod = 4;
    fs.dataflow.frames_per_task = {4, 1};
    DataflowEdge e;
    e.writer = 0;
    e.reader = 1;
    e.writer_of = {FrameRef{0, 0}}; // reader k consumes writer job 4(k-1)+1
    fs.dataflow.edges.push_back(e);
    fs.frames.resize(2);
    fs.frames[0].resize(4);
    for (int j = 0; j < 4; ++j)
        fs.frames[0][static_cast<std::size_t>(j)] = Frame{j, j, j, {}};
    fs.frames[1] = {Frame{0, 0, 0, {ReadBinding{0, 0, 0}}}};

    SUBCASE("two further writes can land before the latest read: three slots")
    {
        // writer finishes (earliest) at t = k; reader k starts (latest) at 4k-1
        Trace wc, bc;
        wc.hyperperiod = bc.hyperperiod = 4;
        fill_row(bc, 0, {{{0, 0, 1}}, {{1, 1, 2}}, {{2, 2, 3}}, {{3, 3, 4}},
                         {{4, 4, 5}}, {{5, 5, 6}}, {{6, 6, 7}}, {{7, 7, 8}},
                         {{8, 8, 9}}, {{9, 9, 10}}});
        fill_row(bc, 1, {{{0, 1, 2}}, {{4, 5, 6}}});
        fill_row(wc, 0, {{{0, 0, 1}}, {{1, 1, 2}}, {{2, 2, 3}}, {{3, 3, 4}},
                         {{4, 4, 5}}, {{5, 5, 6}}, {{6, 6, 7}}, {{7, 7, 8}},
                         {{8, 8, 9}}, {{9, 9, 10}}});
        fill_row(wc, 1, {{{0, 3, 4}}, {{4, 7, 8}}});
        RwBounds bounds(wc, bc, {4, 1});
        std::map<int, long long> plan = buffer_sizes(fs, bounds);
        CHECK(plan == std::map<int, long long>{{0, 3}});
    }

    SUBCASE("reads immediately after the intended write: one slot")
    {
        Trace wc, bc;
        wc.hyperperiod = bc.hyperperiod = 4;
        fill_row(bc, 0, {{{0, 0, 1}}, {{1, 1, 2}}, {{2, 2, 3}}, {{3, 3, 4}},
                         {{4, 4, 5}}, {{5, 5, 6}}, {{6, 6, 7}}, {{7, 7, 8}},
                         {{8, 8, 9}}, {{9, 9, 10}}});
        fill_row(bc, 1, {{{0, 1, 2}}, {{4, 5, 6}}});
        fill_row(wc, 0, {{{0, 0, 1}}, {{1, 1, 2}}, {{2, 2, 3}}, {{3, 3, 4}},
                         {{4, 4, 5}}, {{5, 5, 6}}, {{6, 6, 7}}, {{7, 7, 8}},
                         {{8, 8, 9}}, {{9, 9, 10}}});
        fill_row(wc, 1, {{{0, 1, 2}}, {{4, 5, 6}}}); // latest read right at the write
        RwBounds bounds(wc, bc, {4, 1});
        std::map<int, long long> plan = buffer_sizes(fs, bounds);
        CHECK(plan == std::map<int, long long>{{0, 1}});
    }
}

TEST_CASE("computed buffer need covers the cross-hyperperiod reader")
{
    System sys = testutil::two_task_buffer();
    FramedSystem fsys = treat(sys);
    CHECK(fsys.set.buffer_sizes == std::map<int, long long>{{0, 2}});

    // the demand repeats hyperperiod over hyperperiod
    RwBounds bounds = make_rw_bounds(fsys.set);
    const DataflowEdge& e = fsys.set.dataflow.edges[0];
    for (long long k = 2; k <= 6; ++k)
        CHECK(detail::slot_demand(fsys.set.dataflow, e, k, bounds) ==
              detail::slot_demand(fsys.set.dataflow, e, k + 1, bounds));
}

TEST_CASE("round-robin slots by job index")
{
    FramedTaskSet fs;
    fs.buffer_sizes[0] = 2;
    CHECK(fs.write_slot(0, 1) == 0);
    CHECK(fs.write_slot(0, 2) == 1);
    CHECK(fs.write_slot(0, 3) == 0);
}
