#ifndef CECHAIN_HARNESS_HPP
#define CECHAIN_HARNESS_HPP

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "io.hpp"

namespace cechain {

/// Analysis of one chain: the all-WCET maximum, the all-BCET minimum, and
/// the chain achieving the maximum.
struct ChainReport {
    Chain chain;
    dtime_t mrt = 0;
    dtime_t mrt_min = 0;
    Iac argmax;
    std::vector<Iac> iacs; // all-WCET reaction table

    dtime_t jitter() const { return mrt - mrt_min; }
};

struct ProbeReport {
    bool ran = false;
    bool present = false;
    dtime_t exhaustive_max = 0;
    int cause = 0;
    std::string note;
};

struct AnalysisReport {
    bool treated = false;
    int window_hyperperiods = 2;
    std::vector<ChainReport> chains;
    std::vector<ProbeReport> probes;  // aligned with chains; untreated only
    long long memory_slots = 0;       // treated only: total planned tokens
};

/// Analyzes an untreated system under register communication.  A small
/// exhaustive probe warns about timing anomalies unless its budget is
/// exceeded.
inline AnalysisReport analyze_untreated(const System& sys, int window_hyperperiods = 2,
                                        int probe_levels = 2, long long probe_budget = 4096)
{
    AnalysisReport rep;
    rep.window_hyperperiods = window_hyperperiods;
    ScheduleAnalysis wc =
        analyze_schedule(sys.set, sys.chains, ExecPolicy::all_wcet(), window_hyperperiods);
    ScheduleAnalysis bc =
        analyze_schedule(sys.set, sys.chains, ExecPolicy::all_bcet(), window_hyperperiods);
    for (std::size_t c = 0; c < sys.chains.size(); ++c) {
        ChainReport cr;
        cr.chain = sys.chains[c];
        cr.mrt = wc.per_chain[c].max_length;
        cr.mrt_min = bc.per_chain[c].min_length;
        cr.argmax = wc.per_chain[c].argmax;
        cr.iacs = wc.per_chain[c].iacs;
        rep.chains.push_back(std::move(cr));

        ProbeReport probe;
        if (probe_levels >= 1) {
            try {
                TaVerdict v = detect_ta(sys, sys.chains[c], probe_levels, 0,
                                        window_hyperperiods * sys.set.hyperperiod +
                                            sys.set.phase_max,
                                        probe_budget, window_hyperperiods);
                probe.ran = true;
                probe.present = v.present;
                probe.exhaustive_max = v.exhaustive_max;
                probe.cause = v.cause;
            } catch (const InputError& e) {
                probe.note = e.what(); // budget exceeded: report, don't fail
            }
        }
        rep.probes.push_back(std::move(probe));
    }
    return rep;
}

/// Analyzes a treated system: event times from the framed simulation, job
/// chains fixed by the dataflow.  A budget-capped exhaustive probe stamps
/// each chain as certified anomaly-free when it can afford the sweep.
inline AnalysisReport analyze_treated(const FramedSystem& fsys, int window_hyperperiods = 2,
                                      int probe_levels = 2, long long probe_budget = 4096)
{
    AnalysisReport rep;
    rep.treated = true;
    rep.window_hyperperiods = window_hyperperiods;
    ScheduleAnalysis wc =
        analyze_schedule(fsys.set, fsys.chains, ExecPolicy::all_wcet(), window_hyperperiods);
    ScheduleAnalysis bc =
        analyze_schedule(fsys.set, fsys.chains, ExecPolicy::all_bcet(), window_hyperperiods);
    for (std::size_t c = 0; c < fsys.chains.size(); ++c) {
        ChainReport cr;
        cr.chain = fsys.chains[c];
        cr.mrt = wc.per_chain[c].max_length;
        cr.mrt_min = bc.per_chain[c].min_length;
        cr.argmax = wc.per_chain[c].argmax;
        cr.iacs = wc.per_chain[c].iacs;
        rep.chains.push_back(std::move(cr));

        ProbeReport probe;
        if (probe_levels >= 1) {
            try {
                Certification cert = certify_treated(
                    fsys, fsys.chains[c], probe_levels, 0,
                    window_hyperperiods * fsys.set.hyperperiod + fsys.set.base.phase_max,
                    probe_budget, window_hyperperiods);
                probe.ran = true;
                probe.present = !cert.anomaly_free;
                probe.exhaustive_max = cert.exhaustive_max;
            } catch (const InputError& e) {
                probe.note = e.what();
            }
        }
        rep.probes.push_back(std::move(probe));
    }
    for (const auto& [task, bs] : fsys.set.buffer_sizes)
        rep.memory_slots += bs;
    return rep;
}

/// True when some certification probe ran and found an exceedance — a
/// treated system must never show one.
inline bool certification_failed(const AnalysisReport& rep)
{
    if (!rep.treated)
        return false;
    for (const ProbeReport& p : rep.probes)
        if (p.ran && p.present)
            return true;
    return false;
}

inline std::string write_analysis_report(const AnalysisReport& rep)
{
    std::ostringstream out;
    out << "cechain-analysis v1\n";
    out << "treated " << (rep.treated ? 1 : 0) << "\n";
    out << "window_hyperperiods " << rep.window_hyperperiods << "\n";
    if (rep.treated)
        out << "memory_slots " << rep.memory_slots << "\n";
    for (std::size_t c = 0; c < rep.chains.size(); ++c) {
        const ChainReport& cr = rep.chains[c];
        out << "chain " << chain_str(cr.chain) << "\n";
        out << "mrt " << cr.mrt << "\n";
        out << "mrt_min " << cr.mrt_min << "\n";
        out << "jitter " << cr.jitter() << "\n";
        out << "argmax_m " << cr.argmax.m << "\n";
        out << "argmax_z " << cr.argmax.z << "\n";
        out << "argmax_zprime " << cr.argmax.z_prime << "\n";
        out << "argmax_jobs " << jobs_str(cr.argmax.jobs) << "\n";
        const ProbeReport& p = rep.probes[c];
        if (rep.treated) {
            if (!p.ran)
                out << "ta_certified skipped" << (p.note.empty() ? "" : " # " + p.note) << "\n";
            else if (p.present)
                out << "ta_certified FAILED max " << p.exhaustive_max << "\n";
            else
                out << "ta_certified max " << p.exhaustive_max << "\n";
        } else {
            if (!p.ran)
                out << "ta_probe skipped" << (p.note.empty() ? "" : " # " + p.note) << "\n";
            else if (p.present)
                out << "ta_probe anomaly max " << p.exhaustive_max << " cause " << p.cause
                    << "\n";
            else
                out << "ta_probe clean max " << p.exhaustive_max << "\n";
        }
    }
    return out.str();
}

/// Aggregates of repeated sampled runs of a treated system.
struct RunStats {
    long long runs = 0;
    bool forced_wcet = false;
    std::vector<ChainReport> analysis;     // the boundary analyses, per chain
    std::vector<double> art_event_mean;    // mean reaction over runs and indices
    std::vector<double> art_run_max_mean;  // mean over runs of each run's maximum
    std::vector<dtime_t> observed_min;
    std::vector<dtime_t> observed_max;
    std::vector<long long> out_of_range;   // reactions outside [mrt_min, mrt]
    std::map<int, long long> occupancy_peak;
    long long rfi_violations = 0;
    std::string per_run_csv;
};

inline RunStats simulate_runs(const FramedSystem& fsys, long long runs, std::uint64_t seed,
                              bool forced_wcet, int window_hyperperiods = 2)
{
    AnalysisReport base = analyze_treated(fsys, window_hyperperiods);
    RunStats st;
    st.runs = runs;
    st.forced_wcet = forced_wcet;
    st.analysis = base.chains;
    std::size_t nchains = fsys.chains.size();
    st.art_event_mean.assign(nchains, 0);
    st.art_run_max_mean.assign(nchains, 0);
    st.observed_min.assign(nchains, 0);
    st.observed_max.assign(nchains, 0);
    st.out_of_range.assign(nchains, 0);

    std::ostringstream csv;
    csv << "run,chain,reactions,mean,min,max\n";
    for (long long r = 0; r < runs; ++r) {
        ExecPolicy policy =
            forced_wcet ? ExecPolicy::all_wcet() : ExecPolicy::sampled(mix_key(seed, r));
        RunReactions rr = run_and_measure(fsys.set, fsys.chains, policy, window_hyperperiods);
        if (!rr.log.rfi_ok)
            ++st.rfi_violations;
        for (const auto& [task, peak] : rr.log.max_occupancy) {
            auto [it, fresh] = st.occupancy_peak.try_emplace(task, peak);
            if (!fresh)
                it->second = std::max(it->second, peak);
        }
        for (std::size_t c = 0; c < nchains; ++c) {
            const ReactionSummary& s = rr.per_chain[c];
            st.art_event_mean[c] += s.mean_length();
            st.art_run_max_mean[c] += static_cast<double>(s.max_length);
            if (r == 0 || s.min_length < st.observed_min[c])
                st.observed_min[c] = s.min_length;
            if (r == 0 || s.max_length > st.observed_max[c])
                st.observed_max[c] = s.max_length;
            for (const Iac& i : s.iacs)
                if (i.length() < st.analysis[c].mrt_min || i.length() > st.analysis[c].mrt)
                    ++st.out_of_range[c];
            csv << r << "," << c << "," << s.iacs.size() << "," << s.mean_length() << ","
                << s.min_length << "," << s.max_length << "\n";
        }
    }
    for (std::size_t c = 0; c < nchains; ++c) {
        st.art_event_mean[c] /= static_cast<double>(std::max<long long>(1, runs));
        st.art_run_max_mean[c] /= static_cast<double>(std::max<long long>(1, runs));
    }
    st.per_run_csv = csv.str();
    return st;
}

inline std::string write_run_summary(const FramedSystem& fsys, const RunStats& st)
{
    std::ostringstream out;
    out << "cechain-simulate v1\n";
    out << "runs " << st.runs << "\n";
    out << "forced_wcet " << (st.forced_wcet ? 1 : 0) << "\n";
    out << "rfi_violations " << st.rfi_violations << "\n";
    for (std::size_t c = 0; c < st.analysis.size(); ++c) {
        out << "chain " << chain_str(st.analysis[c].chain) << "\n";
        out << "mrt " << st.analysis[c].mrt << "\n";
        out << "mrt_min " << st.analysis[c].mrt_min << "\n";
        out << "jitter " << st.analysis[c].jitter() << "\n";
        out << "art_event_mean " << st.art_event_mean[c] << "\n";
        out << "art_run_max_mean " << st.art_run_max_mean[c] << "\n";
        out << "observed_min " << st.observed_min[c] << "\n";
        out << "observed_max " << st.observed_max[c] << "\n";
        out << "out_of_range " << st.out_of_range[c] << "\n";
    }
    long long total = 0;
    for (const auto& [task, bs] : fsys.set.buffer_sizes)
        total += bs;
    out << "memory_slots " << total << "\n";
    for (const auto& [task, bs] : fsys.set.buffer_sizes) {
        auto it = st.occupancy_peak.find(task);
        out << "writer " << task << " slots " << bs << " max_occupancy "
            << (it == st.occupancy_peak.end() ? 0 : it->second) << "\n";
    }
    return out.str();
}

/// Oracle verdict serialization (see the oracle module for the search).
inline std::string write_verdict(const Chain& chain, const TaVerdict& v)
{
    std::ostringstream out;
    out << "cechain-oracle v1\n";
    out << "chain " << chain_str(chain) << "\n";
    out << "treated 0\n";
    out << "runs " << v.runs << "\n";
    out << "analyzed_mrt " << v.analyzed_mrt << "\n";
    out << "exhaustive_max " << v.exhaustive_max << "\n";
    out << "anomaly " << (v.present ? 1 : 0) << "\n";
    if (v.present) {
        out << "cause " << v.cause << "\n";
        out << "witness_m " << v.witness_iac.m << "\n";
        out << "witness_ic " << jobs_str(v.witness_iac.jobs) << "\n";
        out << "witness_iac " << v.witness_iac.z << " " << v.witness_iac.z_prime << "\n";
        if (v.wcet_iac.valid) {
            out << "wcet_ic " << jobs_str(v.wcet_iac.jobs) << "\n";
            out << "wcet_iac " << v.wcet_iac.z << " " << v.wcet_iac.z_prime << "\n";
        }
        out << "witness_policy";
        for (const auto& [job, dur] : v.witness_policy)
            out << " " << job.task << ":" << job.k << "=" << dur;
        out << "\n";
    }
    return out.str();
}

inline std::string write_certification(const Chain& chain, const Certification& c)
{
    std::ostringstream out;
    out << "cechain-oracle v1\n";
    out << "chain " << chain_str(chain) << "\n";
    out << "treated 1\n";
    out << "runs " << c.runs << "\n";
    out << "analyzed_mrt " << c.analyzed_mrt << "\n";
    out << "exhaustive_max " << c.exhaustive_max << "\n";
    out << "anomaly_free " << (c.anomaly_free ? 1 : 0) << "\n";
    return out.str();
}

/// Generation driver: emits systems for every (utilization, index) pair,
/// writes one file per system plus a manifest, and verifies each emitted
/// file lands within the utilization tolerance when read back.
struct GenBatch {
    std::vector<GeneratedSystem> systems;
    std::string manifest_csv;
    std::vector<std::string> files;
};

inline GenBatch generate_batch(const BenchConfig& cfg, const std::vector<double>& utils,
                               int count, std::uint64_t seed, const std::string& out_dir)
{
    GenBatch batch;
    std::ostringstream manifest;
    manifest << "seed,util_target,util_actual,alpha,tasks,schedulable,file\n";
    for (double u : utils) {
        int made = 0;
        std::uint64_t s = seed;
        int dry = 0;
        while (made < count) {
            GeneratedSystem g;
            try {
                g = generate_system(cfg, u, s++);
            } catch (const InfeasibleError&) {
                if (++dry > 50 * count)
                    throw;
                continue; // this seed yields no viable subset or chain
            }
            dry = 0;
            std::string name = "sys_u" + std::to_string(static_cast<int>(u * 100 + 0.5)) +
                               "_s" + std::to_string(g.seed) + ".txt";
            std::string path = out_dir.empty() ? name : out_dir + "/" + name;
            std::string text = write_system(g.sys);
            if (!out_dir.empty()) {
                write_file(path, text);
                System back = parse_system(read_file(path));
                if (std::abs(utilization(back.set) - u) > cfg.util_tolerance)
                    throw PropertyError("emitted system misses the utilization target");
            }
            manifest << g.seed << "," << g.util_target << "," << g.util_actual << ","
                     << cfg.alpha << "," << g.sys.set.size() << "," << (g.schedulable ? 1 : 0)
                     << "," << name << "\n";
            batch.files.push_back(path);
            batch.systems.push_back(std::move(g));
            ++made;
        }
    }
    batch.manifest_csv = manifest.str();
    if (!out_dir.empty())
        write_file(out_dir + "/manifest.csv", batch.manifest_csv);
    return batch;
}

} // namespace cechain

#endif
