#include "doctest.h"

#include "cechain/io.hpp"
#include "test_util.hpp"

using namespace cechain;

TEST_CASE("system files round-trip byte-stable")
{
    System sys = testutil::fig1();
    std::string text = write_system(sys);
    System back = parse_system(text);
    CHECK(back == sys);
    CHECK(write_system(back) == text);

    for (int trial = 0; trial < 10; ++trial) {
        System r = testutil::random_system(trial, 5, trial % 2 == 0);
        CHECK(parse_system(write_system(r)) == r);
    }
}

TEST_CASE("system files carry the tick unit")
{
    System sys = testutil::fig1();
    sys.tick.ns_per_tick = 500;
    System back = parse_system(write_system(sys));
    CHECK(back.tick.ns_per_tick == 500);
}

TEST_CASE("malformed system files fail with line diagnostics")
{
    CHECK_THROWS_AS(parse_system(""), InputError);
    CHECK_THROWS_AS(parse_system("bogus v1\n"), InputError);
    CHECK_THROWS_WITH_AS(parse_system("cechain-system v1\ntick_ns 1000\ntasks 1\n"
                                      "task 0 period x phase 0 bcet 1 wcet 1 priority 1\n"
                                      "chains 0\n"),
                         doctest::Contains("malformed number"), InputError);
    // validation failures surface too: BCET above WCET
    CHECK_THROWS_AS(parse_system("cechain-system v1\ntick_ns 1000\ntasks 1\n"
                                 "task 0 period 5 phase 0 bcet 4 wcet 1 priority 1\n"
                                 "chains 0\n"),
                    InputError);
}

TEST_CASE("transformed files round-trip byte-stable and rebuild the dataflow")
{
    System sys = testutil::fig1();
    FramedSystem fsys = treat(sys);
    std::string text = write_framed(fsys);
    FramedSystem back = parse_framed(text);
    CHECK(back.set.base == fsys.set.base);
    CHECK(back.set.frames == fsys.set.frames);
    CHECK(back.set.dataflow == fsys.set.dataflow);
    CHECK(back.set.buffer_sizes == fsys.set.buffer_sizes);
    CHECK(back.chains == fsys.chains);
    CHECK(write_framed(back) == text);

    for (int trial = 0; trial < 6; ++trial) {
        FramedSystem f = treat(testutil::random_schedulable(trial + 3000, 4));
        FramedSystem b = parse_framed(write_framed(f));
        CHECK(b.set == f.set);
        // a parsed system simulates identically
        dtime_t h = 2 * f.set.hyperperiod + f.set.phase_adj_max() + 1;
        CHECK(simulate(b.set, ExecPolicy::all_wcet(), h) ==
              simulate(f.set, ExecPolicy::all_wcet(), h));
    }
}

TEST_CASE("trace CSV lists one row per job")
{
    System sys = testutil::fig1();
    Trace t = simulate(sys.set, ExecPolicy::all_wcet(), 6000);
    std::string text = write_trace_text(t);
    CHECK(text.find("cechain-trace v1\n") == 0);
    CHECK(text.find("policy all-wcet") != std::string::npos);
    CHECK(text.find("job 0 1 release 0 start 1000 finish 5500 exec 2500 miss 0 "
                    "preempted 2000:3000 4000:5000") != std::string::npos);
    std::string csv = write_trace_csv(t);
    CHECK(csv.find("task,k,release,start,finish,exec,deadline_miss\n") == 0);
    CHECK(csv.find("1,1,0,0,1000,1000,0\n") != std::string::npos);
    CHECK(csv.find("0,1,0,1000,5500,2500,0\n") != std::string::npos);
    CHECK(csv.find("2,1,0,5500,6000,500,0\n") != std::string::npos);
}

TEST_CASE("communication log CSV carries tags and verdicts")
{
    System sys = testutil::two_task_buffer();
    FramedSystem fsys = treat(sys);
    auto [trace, log] = online_run(fsys.set, ExecPolicy::all_wcet(),
                                   2 * fsys.set.hyperperiod + fsys.set.phase_adj_max() + 1);
    std::string csv = write_commlog_csv(log);
    CHECK(csv.find("reader_task,reader_k,time,slot,intended_task,intended_k,actual_task,"
                   "actual_k,tag_ok\n") == 0);
    CHECK(csv.find("1,1,") != std::string::npos); // the sentinel read of job 1
    std::string occ = write_occupancy(fsys.set, log);
    CHECK(occ.find("memory_slots_total 2") != std::string::npos);
}

TEST_CASE("bench configs parse, serialize, and reject junk")
{
    BenchConfig cfg;
    cfg.periods = {50, 100};
    cfg.period_weights = {1, 2};
    cfg.mean_exec = {2, 4};
    cfg.max_tasks = 6;
    std::string text = write_bench_config(cfg);
    BenchConfig back = parse_bench_config(text);
    CHECK(back.periods == cfg.periods);
    CHECK(back.max_tasks == 6);
    CHECK(write_bench_config(back) == text);

    CHECK_THROWS_AS(parse_bench_config("cechain-config v1\nnonsense 4\n"), InputError);
    CHECK_THROWS_AS(parse_bench_config("cechain-config v1\nperiods 10\nalpha 7\n"), InputError);
}

TEST_CASE("atomic writes land complete files")
{
    std::string path = "build_test_io_scratch/out.txt";
    write_file(path, "hello\n");
    CHECK(read_file(path) == "hello\n");
    write_file(path, "replaced\n");
    CHECK(read_file(path) == "replaced\n");
    std::filesystem::remove_all("build_test_io_scratch");
}
