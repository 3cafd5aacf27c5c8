// cechain: simulate periodic fixed-priority schedules, analyze cause-effect
// chain reaction times, and treat systems so that their worst case is exact.
//
// Subcommands: gen, transform, analyze, simulate, oracle.
// Exit codes: 0 ok, 2 bad input, 3 infeasible system, 4 property violation.

#include <iostream>

#include "CLI11.hpp"

#include "cechain/harness.hpp"

using namespace cechain;

namespace {

Chain pick_chain(const std::vector<Chain>& chains, const std::vector<int>& explicit_tasks,
                 int index)
{
    if (!explicit_tasks.empty())
        return Chain{explicit_tasks};
    if (chains.empty())
        throw InputError("the system file declares no chains; pass --chain");
    if (index < 0 || static_cast<std::size_t>(index) >= chains.size())
        throw InputError("chain index out of range");
    return chains[static_cast<std::size_t>(index)];
}

int run(int argc, char** argv)
{
    CLI::App app{"cause-effect chain latency toolkit"};
    app.require_subcommand(1);
    app.footer("Set CECHAIN_THREADS to bound the oracle's worker threads.");

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate benchmark systems and chains");
    std::string gen_config, gen_out;
    std::uint64_t gen_seed = 1;
    int gen_count = 10;
    std::vector<double> gen_utils;
    double gen_alpha = -1;
    long long gen_tick = 0;
    bool gen_print = false;
    gen->add_option("--config", gen_config, "generator config file (default: automotive)");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "base seed (systems use seed, seed+1, ...)");
    gen->add_option("--count", gen_count, "systems per utilization target");
    gen->add_option("--util", gen_utils, "utilization targets (default 0.6 0.7 0.8 0.9)");
    gen->add_option("--alpha", gen_alpha, "override the BCET factor");
    gen->add_option("--tick-ns", gen_tick, "override the tick unit (ns per tick)");
    gen->add_flag("--print-config", gen_print, "print the effective config and exit");

    // ---- transform ----
    auto* tr = app.add_subcommand("transform", "extract the dataflow and emit the treated file");
    std::string tr_system, tr_out;
    tr->add_option("--system", tr_system, "system file")->required();
    tr->add_option("--out", tr_out, "treated output file")->required();

    // ---- analyze ----
    auto* an = app.add_subcommand("analyze", "reaction-time analysis of a system's chains");
    std::string an_system, an_prefix;
    bool an_treated = false, an_no_probe = false;
    int an_window = 2, an_probe_levels = 2;
    long long an_probe_budget = 4096;
    an->add_option("--system", an_system, "system file")->required();
    an->add_flag("--treated", an_treated, "apply the dataflow treatment first");
    an->add_option("--out-prefix", an_prefix, "write report and per-chain CSVs here");
    an->add_option("--window-hyperperiods", an_window, "sampling window span (default 2)");
    an->add_option("--probe-levels", an_probe_levels, "anomaly probe grid (untreated only)");
    an->add_option("--probe-budget", an_probe_budget, "max probe runs before skipping");
    an->add_flag("--no-probe", an_no_probe, "skip the anomaly probe");

    // ---- simulate ----
    auto* si = app.add_subcommand("simulate", "repeated sampled runs of a treated system");
    std::string si_file, si_prefix;
    long long si_runs = 1000;
    std::uint64_t si_seed = 1;
    bool si_forced = false;
    int si_window = 2;
    si->add_option("--transformed", si_file, "treated system file")->required();
    si->add_option("--runs", si_runs, "number of runs");
    si->add_option("--seed", si_seed, "sampling seed");
    si->add_flag("--force-wcet", si_forced, "run every job at its WCET");
    si->add_option("--out-prefix", si_prefix, "write summary, per-run CSV and occupancy here");
    si->add_option("--window-hyperperiods", si_window, "sampling window span (default 2)");

    // ---- oracle ----
    auto* orc = app.add_subcommand("oracle", "exhaustive execution-time search for anomalies");
    std::string orc_system, orc_out;
    bool orc_treated = false;
    int orc_levels = 3, orc_window = 2, orc_chain_index = 0;
    long long orc_budget = 531441;
    dtime_t orc_lo = 0, orc_hi = -1;
    std::vector<int> orc_chain;
    orc->add_option("--system", orc_system, "system file")->required();
    orc->add_flag("--treated", orc_treated, "treat the system, then certify it");
    orc->add_option("--levels", orc_levels, "execution-time levels per job (default 3)");
    orc->add_option("--chain", orc_chain, "chain as task ids (default: --chain-index)");
    orc->add_option("--chain-index", orc_chain_index, "which declared chain (default 0)");
    orc->add_option("--window-lo", orc_lo, "enumeration window start (ticks)");
    orc->add_option("--window-hi", orc_hi, "enumeration window end (default 2H + O_max)");
    orc->add_option("--window-hyperperiods", orc_window, "sampling window span (default 2)");
    orc->add_option("--budget", orc_budget, "max enumerated assignments");
    orc->add_option("--out", orc_out, "verdict file");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        BenchConfig cfg = gen_config.empty() ? BenchConfig::automotive()
                                             : parse_bench_config(read_file(gen_config));
        if (gen_alpha > 0)
            cfg.alpha = gen_alpha;
        if (gen_tick > 0)
            cfg.tick.ns_per_tick = gen_tick;
        cfg.validate();
        if (gen_print) {
            std::cout << write_bench_config(cfg);
            return 0;
        }
        if (gen_utils.empty())
            gen_utils = {0.6, 0.7, 0.8, 0.9};
        GenBatch batch = generate_batch(cfg, gen_utils, gen_count, gen_seed, gen_out);
        std::cout << "generated " << batch.systems.size() << " systems into " << gen_out
                  << "\n";
        return 0;
    }

    if (tr->parsed()) {
        System sys = parse_system(read_file(tr_system));
        FramedSystem fsys = treat(sys);
        write_file(tr_out, write_framed(fsys));
        std::cout << "wrote " << tr_out << "\n";
        return 0;
    }

    if (an->parsed()) {
        System sys = parse_system(read_file(an_system));
        AnalysisReport rep;
        int probe_levels = an_no_probe ? 0 : an_probe_levels;
        if (an_treated) {
            FramedSystem fsys = treat(sys);
            rep = analyze_treated(fsys, an_window, probe_levels, an_probe_budget);
        } else {
            rep = analyze_untreated(sys, an_window, probe_levels, an_probe_budget);
        }
        std::string text = write_analysis_report(rep);
        std::cout << text;
        if (!an_prefix.empty()) {
            write_file(an_prefix + "report.txt", text);
            for (std::size_t c = 0; c < rep.chains.size(); ++c)
                write_file(an_prefix + "chain" + std::to_string(c) + ".csv",
                           write_reaction_csv(rep.chains[c].iacs));
        }
        if (certification_failed(rep))
            throw PropertyError("a treated chain exceeded its all-WCET analysis");
        return 0;
    }

    if (si->parsed()) {
        FramedSystem fsys = parse_framed(read_file(si_file));
        RunStats st = simulate_runs(fsys, si_runs, si_seed, si_forced, si_window);
        std::string text = write_run_summary(fsys, st);
        std::cout << text;
        if (!si_prefix.empty()) {
            write_file(si_prefix + "summary.txt", text);
            write_file(si_prefix + "runs.csv", st.per_run_csv);
        }
        if (st.rfi_violations > 0)
            throw PropertyError("a run read data from an unintended producer");
        for (std::size_t c = 0; c < st.out_of_range.size(); ++c)
            if (st.out_of_range[c] > 0)
                throw PropertyError("a reaction left the [mRT, MRT] range on chain " +
                                    std::to_string(c));
        return 0;
    }

    if (orc->parsed()) {
        System sys = parse_system(read_file(orc_system));
        Chain chain = pick_chain(sys.chains, orc_chain, orc_chain_index);
        dtime_t hi = orc_hi >= 0 ? orc_hi
                                 : orc_window * sys.set.hyperperiod + sys.set.phase_max;
        std::string text;
        bool violated = false;
        if (orc_treated) {
            FramedSystem fsys = treat(sys);
            Certification c =
                certify_treated(fsys, chain, orc_levels, orc_lo, hi, orc_budget, orc_window);
            text = write_certification(chain, c);
            violated = !c.anomaly_free;
        } else {
            TaVerdict v = detect_ta(sys, chain, orc_levels, orc_lo, hi, orc_budget, orc_window);
            text = write_verdict(chain, v);
        }
        std::cout << text;
        if (!orc_out.empty())
            write_file(orc_out, text);
        if (violated)
            throw PropertyError("treated system exceeded its all-WCET analysis");
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const PropertyError& e) {
        std::cerr << "property violation: " << e.what() << "\n";
        return 4;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
