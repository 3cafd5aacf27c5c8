#ifndef CECHAIN_IO_HPP
#define CECHAIN_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "benchgen.hpp"
#include "frames.hpp"
#include "oracle.hpp"
#include "runtime.hpp"

namespace cechain {

namespace detail {

class LineParser {
public:
    LineParser(const std::string& text, std::string what) : what_(std::move(what))
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            lines_.push_back(line);
        }
    }

    bool done() const { return pos_ >= lines_.size(); }

    std::vector<std::string> try_next()
    {
        while (!done()) {
            const std::string& line = lines_[pos_++];
            if (line.empty() || line[0] == '#')
                continue;
            std::vector<std::string> tok;
            std::istringstream in(line);
            std::string t;
            while (in >> t)
                tok.push_back(t);
            return tok;
        }
        return {};
    }

    std::vector<std::string> next()
    {
        std::vector<std::string> tok = try_next();
        if (tok.empty())
            fail("unexpected end of file");
        return tok;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw InputError(what_ + ", line " + std::to_string(pos_) + ": " + msg);
    }

    long long num(const std::string& tok) const
    {
        try {
            std::size_t used = 0;
            long long v = std::stoll(tok, &used);
            if (used != tok.size())
                fail("malformed number '" + tok + "'");
            return v;
        } catch (const InputError&) {
            throw;
        } catch (...) {
            fail("malformed number '" + tok + "'");
        }
    }

    double real(const std::string& tok) const
    {
        try {
            std::size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size())
                fail("malformed number '" + tok + "'");
            return v;
        } catch (const InputError&) {
            throw;
        } catch (...) {
            fail("malformed number '" + tok + "'");
        }
    }

    void expect(const std::vector<std::string>& tok, std::size_t n, const std::string& head) const
    {
        if (tok.size() != n || tok[0] != head)
            fail("expected '" + head + "' with " + std::to_string(n - 1) + " fields");
    }

private:
    std::vector<std::string> lines_;
    std::size_t pos_ = 0;
    std::string what_;
};

} // namespace detail

// ---------------------------------------------------------------- system --

inline std::string write_system(const System& sys)
{
    std::ostringstream out;
    out << "cechain-system v1\n";
    out << "tick_ns " << sys.tick.ns_per_tick << "\n";
    out << "tasks " << sys.set.size() << "\n";
    for (const TaskSpec& t : sys.set.tasks)
        out << "task " << t.id << " period " << t.period << " phase " << t.phase << " bcet "
            << t.bcet << " wcet " << t.wcet << " priority " << t.priority << "\n";
    out << "chains " << sys.chains.size() << "\n";
    for (const Chain& c : sys.chains) {
        out << "chain";
        for (int t : c.tasks)
            out << " " << t;
        out << "\n";
    }
    return out.str();
}

namespace detail {

inline TaskSpec parse_task_line(const LineParser& p, const std::vector<std::string>& tok)
{
    if (tok.size() != 12 || tok[0] != "task" || tok[2] != "period" || tok[4] != "phase" ||
        tok[6] != "bcet" || tok[8] != "wcet" || tok[10] != "priority")
        p.fail("expected 'task <id> period <T> phase <O> bcet <B> wcet <W> priority <P>'");
    TaskSpec t;
    t.id = static_cast<int>(p.num(tok[1]));
    t.period = p.num(tok[3]);
    t.phase = p.num(tok[5]);
    t.bcet = p.num(tok[7]);
    t.wcet = p.num(tok[9]);
    t.priority = static_cast<int>(p.num(tok[11]));
    return t;
}

struct SystemHeader {
    TickUnit tick;
    std::vector<TaskSpec> tasks;
    std::vector<Chain> chains;
};

inline SystemHeader parse_system_body(LineParser& p)
{
    SystemHeader h;
    auto tok = p.next();
    p.expect(tok, 2, "tick_ns");
    h.tick.ns_per_tick = p.num(tok[1]);
    if (h.tick.ns_per_tick <= 0)
        p.fail("tick_ns must be positive");
    tok = p.next();
    p.expect(tok, 2, "tasks");
    long long n = p.num(tok[1]);
    for (long long i = 0; i < n; ++i)
        h.tasks.push_back(parse_task_line(p, p.next()));
    tok = p.next();
    p.expect(tok, 2, "chains");
    long long m = p.num(tok[1]);
    for (long long i = 0; i < m; ++i) {
        tok = p.next();
        if (tok.size() < 2 || tok[0] != "chain")
            p.fail("expected 'chain <task>...'");
        Chain c;
        for (std::size_t j = 1; j < tok.size(); ++j)
            c.tasks.push_back(static_cast<int>(p.num(tok[j])));
        h.chains.push_back(std::move(c));
    }
    return h;
}

} // namespace detail

inline System parse_system(const std::string& text)
{
    detail::LineParser p(text, "system file");
    auto tok = p.next();
    if (tok.size() != 2 || tok[0] != "cechain-system" || tok[1] != "v1")
        p.fail("expected header 'cechain-system v1'");
    detail::SystemHeader h = detail::parse_system_body(p);
    return make_system(std::move(h.tasks), std::move(h.chains), h.tick);
}

// --------------------------------------------------------------- treated --

inline std::string write_framed(const FramedSystem& fsys)
{
    const FramedTaskSet& fs = fsys.set;
    std::ostringstream out;
    out << "cechain-transformed v1\n";
    out << "tick_ns " << fsys.tick.ns_per_tick << "\n";
    out << "tasks " << fs.base.size() << "\n";
    for (const TaskSpec& t : fs.base.tasks)
        out << "task " << t.id << " period " << t.period << " phase " << t.phase << " bcet "
            << t.bcet << " wcet " << t.wcet << " priority " << t.priority << "\n";
    out << "chains " << fsys.chains.size() << "\n";
    for (const Chain& c : fsys.chains) {
        out << "chain";
        for (int t : c.tasks)
            out << " " << t;
        out << "\n";
    }
    out << "hyperperiod " << fs.hyperperiod << "\n";
    long long frame_rows = 0, read_rows = 0;
    for (const auto& table : fs.frames) {
        frame_rows += static_cast<long long>(table.size());
        for (const Frame& f : table)
            read_rows += static_cast<long long>(f.reads.size());
    }
    out << "frames " << frame_rows << "\n";
    for (const TaskSpec& t : fs.base.tasks)
        for (const Frame& f : fs.frames[static_cast<std::size_t>(t.id)]) {
            long long wslot =
                fs.buffer_sizes.count(t.id) ? detail::floor_mod(f.id, fs.buffer_size(t.id)) : -1;
            out << "frame " << t.id << " " << f.id << " phase " << f.phase << " phase_adj "
                << f.phase_adj << " np0 " << t.priority << " wslot " << wslot << "\n";
        }
    out << "reads " << read_rows << "\n";
    for (const TaskSpec& t : fs.base.tasks)
        for (const Frame& f : fs.frames[static_cast<std::size_t>(t.id)])
            for (const ReadBinding& rb : f.reads) {
                long long nw = fs.dataflow.frames_per_task[static_cast<std::size_t>(rb.writer_task)];
                long long k0 = static_cast<long long>(rb.delta) * nw + rb.writer_frame + 1;
                long long bs = std::max<long long>(1, fs.buffer_size(rb.writer_task));
                out << "read " << t.id << " " << f.id << " from " << rb.writer_task << " "
                    << rb.writer_frame << " delta " << rb.delta << " slot "
                    << detail::floor_mod(k0 - 1, bs) << "\n";
            }
    out << "buffers " << fs.buffer_sizes.size() << "\n";
    for (const auto& [task, bs] : fs.buffer_sizes)
        out << "buffer " << task << " " << bs << "\n";
    return out.str();
}

inline FramedSystem parse_framed(const std::string& text)
{
    detail::LineParser p(text, "transformed file");
    auto tok = p.next();
    if (tok.size() != 2 || tok[0] != "cechain-transformed" || tok[1] != "v1")
        p.fail("expected header 'cechain-transformed v1'");
    detail::SystemHeader h = detail::parse_system_body(p);

    FramedSystem fsys;
    fsys.tick = h.tick;
    fsys.set.base = validate_task_set(h.tasks);
    validate_chains(fsys.set.base, h.chains);
    fsys.chains = h.chains;

    tok = p.next();
    p.expect(tok, 2, "hyperperiod");
    fsys.set.hyperperiod = p.num(tok[1]);
    if (fsys.set.hyperperiod != fsys.set.base.hyperperiod)
        p.fail("hyperperiod does not match the task periods");
    fsys.set.dataflow.hyperperiod = fsys.set.hyperperiod;
    fsys.set.dataflow.frames_per_task = detail::frames_per_task(fsys.set.base);
    fsys.set.frames.resize(static_cast<std::size_t>(fsys.set.base.size()));
    for (const TaskSpec& t : fsys.set.base.tasks)
        fsys.set.frames[static_cast<std::size_t>(t.id)].resize(
            static_cast<std::size_t>(fsys.set.base.hyperperiod / t.period));

    tok = p.next();
    p.expect(tok, 2, "frames");
    long long nf = p.num(tok[1]);
    for (long long i = 0; i < nf; ++i) {
        tok = p.next();
        if (tok.size() != 11 || tok[0] != "frame" || tok[3] != "phase" || tok[5] != "phase_adj" ||
            tok[7] != "np0" || tok[9] != "wslot")
            p.fail("expected 'frame <task> <id> phase <O> phase_adj <O*> np0 <P> wslot <s>'");
        int task = static_cast<int>(p.num(tok[1]));
        long long id = p.num(tok[2]);
        auto& table = fsys.set.frames.at(static_cast<std::size_t>(task));
        if (id < 0 || static_cast<std::size_t>(id) >= table.size())
            p.fail("frame id out of range");
        Frame& f = table[static_cast<std::size_t>(id)];
        f.id = static_cast<int>(id);
        f.phase = p.num(tok[4]);
        f.phase_adj = p.num(tok[6]);
    }
    tok = p.next();
    p.expect(tok, 2, "reads");
    long long nr = p.num(tok[1]);
    std::map<std::pair<int, int>, std::vector<std::pair<int, FrameRef>>> edge_rows;
    for (long long i = 0; i < nr; ++i) {
        tok = p.next();
        if (tok.size() != 10 || tok[0] != "read" || tok[3] != "from" || tok[6] != "delta" ||
            tok[8] != "slot")
            p.fail("expected 'read <task> <frame> from <wtask> <wframe> delta <d> slot <s>'");
        int task = static_cast<int>(p.num(tok[1]));
        int frame = static_cast<int>(p.num(tok[2]));
        int wtask = static_cast<int>(p.num(tok[4]));
        int wframe = static_cast<int>(p.num(tok[5]));
        int delta = static_cast<int>(p.num(tok[7]));
        auto& table = fsys.set.frames.at(static_cast<std::size_t>(task));
        if (frame < 0 || static_cast<std::size_t>(frame) >= table.size())
            p.fail("read frame out of range");
        table[static_cast<std::size_t>(frame)].reads.push_back(
            ReadBinding{wtask, wframe, delta});
        edge_rows[{wtask, task}].push_back({frame, FrameRef{wframe, delta}});
    }
    for (auto& [edge, rows] : edge_rows) {
        DataflowEdge de;
        de.writer = edge.first;
        de.reader = edge.second;
        de.writer_of.resize(fsys.set.frames.at(static_cast<std::size_t>(edge.second)).size());
        std::vector<bool> seen(de.writer_of.size(), false);
        for (const auto& [frame, ref] : rows) {
            if (seen[static_cast<std::size_t>(frame)])
                p.fail("duplicate read binding for one frame and edge");
            seen[static_cast<std::size_t>(frame)] = true;
            de.writer_of[static_cast<std::size_t>(frame)] = ref;
        }
        for (bool s : seen)
            if (!s)
                p.fail("edge " + std::to_string(edge.first) + "->" + std::to_string(edge.second) +
                       " does not cover every reader frame");
        fsys.set.dataflow.edges.push_back(std::move(de));
    }
    tok = p.next();
    p.expect(tok, 2, "buffers");
    long long nb = p.num(tok[1]);
    for (long long i = 0; i < nb; ++i) {
        tok = p.next();
        if (tok.size() != 3 || tok[0] != "buffer")
            p.fail("expected 'buffer <task> <slots>'");
        long long bs = p.num(tok[2]);
        if (bs < 1)
            p.fail("buffer size must be at least 1");
        fsys.set.buffer_sizes[static_cast<int>(p.num(tok[1]))] = bs;
    }
    return fsys;
}

// ------------------------------------------------------------------ CSVs --

inline std::string write_trace_text(const Trace& trace)
{
    std::ostringstream out;
    out << "cechain-trace v1\n";
    out << "policy " << trace.policy << "\n";
    out << "horizon " << trace.horizon << "\n";
    out << "hyperperiod " << trace.hyperperiod << "\n";
    out << "phase_max " << trace.phase_max << "\n";
    out << "framed " << (trace.framed ? 1 : 0) << "\n";
    for (const auto& row : trace.by_task)
        for (const JobRecord& r : row) {
            if (r.job.task < 0)
                continue;
            out << "job " << r.job.task << " " << r.job.k << " release " << r.release
                << " start " << r.start << " finish " << r.finish << " exec " << r.exec
                << " miss " << (r.deadline_miss ? 1 : 0);
            if (!r.preempted.empty()) {
                out << " preempted";
                for (const auto& [away, back] : r.preempted)
                    out << " " << away << ":" << back;
            }
            out << "\n";
        }
    return out.str();
}

inline std::string write_trace_csv(const Trace& trace)
{
    std::ostringstream out;
    out << "task,k,release,start,finish,exec,deadline_miss\n";
    for (const auto& row : trace.by_task)
        for (const JobRecord& r : row) {
            if (r.job.task < 0)
                continue;
            out << r.job.task << "," << r.job.k << "," << r.release << "," << r.start << ","
                << r.finish << "," << r.exec << "," << (r.deadline_miss ? 1 : 0) << "\n";
        }
    return out.str();
}

inline std::string write_commlog_csv(const CommLog& log)
{
    std::ostringstream out;
    out << "reader_task,reader_k,time,slot,intended_task,intended_k,actual_task,actual_k,tag_ok\n";
    for (const CommLogEntry& e : log.entries) {
        out << e.reader.task << "," << e.reader.k << "," << e.time << "," << e.slot << ",";
        if (e.intended)
            out << e.intended->task << "," << e.intended->k << ",";
        else
            out << "-1,0,";
        if (e.actual)
            out << e.actual->task << "," << e.actual->k << ",";
        else
            out << "-1,0,";
        out << (e.ok ? 1 : 0) << "\n";
    }
    return out.str();
}

inline std::string write_occupancy(const FramedTaskSet& fset, const CommLog& log)
{
    std::ostringstream out;
    out << "cechain-occupancy v1\n";
    long long total = 0;
    for (const auto& [task, bs] : fset.buffer_sizes)
        total += bs;
    out << "memory_slots_total " << total << "\n";
    for (const auto& [task, bs] : fset.buffer_sizes) {
        auto it = log.max_occupancy.find(task);
        out << "writer " << task << " slots " << bs << " max_occupancy "
            << (it == log.max_occupancy.end() ? 0 : it->second) << "\n";
    }
    return out.str();
}

inline std::string chain_str(const Chain& c)
{
    std::string s;
    for (std::size_t i = 0; i < c.tasks.size(); ++i)
        s += (i ? " " : "") + std::to_string(c.tasks[i]);
    return s;
}

inline std::string jobs_str(const std::vector<JobId>& jobs)
{
    std::string s;
    for (std::size_t i = 0; i < jobs.size(); ++i)
        s += (i ? " " : "") + std::to_string(jobs[i].task) + ":" + std::to_string(jobs[i].k);
    return s;
}

inline std::string write_reaction_csv(const std::vector<Iac>& iacs)
{
    std::ostringstream out;
    out << "m,z,zprime,length,valid\n";
    for (const Iac& i : iacs) {
        out << i.m << ",";
        if (i.valid)
            out << i.z << "," << i.z_prime << "," << i.length() << ",1\n";
        else
            out << "-1,-1,-1,0\n";
    }
    return out.str();
}

// ---------------------------------------------------------------- config --

inline std::string write_bench_config(const BenchConfig& cfg)
{
    std::ostringstream out;
    auto list = [&out](const char* key, const auto& v) {
        out << key;
        for (const auto& x : v)
            out << " " << x;
        out << "\n";
    };
    out << "cechain-config v1\n";
    out << "tick_ns " << cfg.tick.ns_per_tick << "\n";
    list("periods", cfg.periods);
    list("period_weights", cfg.period_weights);
    list("mean_exec", cfg.mean_exec);
    out << "weibull_shape " << cfg.weibull_shape << "\n";
    out << "wcet_factor " << cfg.f_min << " " << cfg.f_max << "\n";
    out << "alpha " << cfg.alpha << "\n";
    list("pj_weights", cfg.pj_weights);
    list("tasks_per_period_weights", cfg.tasks_per_period_weights);
    out << "candidates " << cfg.candidates_min << " " << cfg.candidates_max << "\n";
    out << "chains " << cfg.chains_min << " " << cfg.chains_max << "\n";
    out << "max_tasks " << cfg.max_tasks << "\n";
    out << "util_tolerance " << cfg.util_tolerance << "\n";
    return out.str();
}

inline BenchConfig parse_bench_config(const std::string& text)
{
    detail::LineParser p(text, "config file");
    auto tok = p.next();
    if (tok.size() != 2 || tok[0] != "cechain-config" || tok[1] != "v1")
        p.fail("expected header 'cechain-config v1'");
    BenchConfig cfg;
    cfg.periods.clear();
    cfg.period_weights.clear();
    cfg.mean_exec.clear();
    while (!p.done()) {
        tok = p.try_next();
        if (tok.empty())
            break;
        const std::string& key = tok[0];
        auto nums = [&](std::vector<double>& dst) {
            dst.clear();
            for (std::size_t i = 1; i < tok.size(); ++i)
                dst.push_back(p.real(tok[i]));
        };
        if (key == "tick_ns" && tok.size() == 2)
            cfg.tick.ns_per_tick = p.num(tok[1]);
        else if (key == "periods") {
            for (std::size_t i = 1; i < tok.size(); ++i)
                cfg.periods.push_back(p.num(tok[i]));
        } else if (key == "period_weights")
            nums(cfg.period_weights);
        else if (key == "mean_exec")
            nums(cfg.mean_exec);
        else if (key == "weibull_shape" && tok.size() == 2)
            cfg.weibull_shape = p.real(tok[1]);
        else if (key == "wcet_factor" && tok.size() == 3) {
            cfg.f_min = p.real(tok[1]);
            cfg.f_max = p.real(tok[2]);
        } else if (key == "alpha" && tok.size() == 2)
            cfg.alpha = p.real(tok[1]);
        else if (key == "pj_weights")
            nums(cfg.pj_weights);
        else if (key == "tasks_per_period_weights")
            nums(cfg.tasks_per_period_weights);
        else if (key == "candidates" && tok.size() == 3) {
            cfg.candidates_min = static_cast<int>(p.num(tok[1]));
            cfg.candidates_max = static_cast<int>(p.num(tok[2]));
        } else if (key == "chains" && tok.size() == 3) {
            cfg.chains_min = static_cast<int>(p.num(tok[1]));
            cfg.chains_max = static_cast<int>(p.num(tok[2]));
        } else if (key == "max_tasks" && tok.size() == 2)
            cfg.max_tasks = static_cast<int>(p.num(tok[1]));
        else if (key == "util_tolerance" && tok.size() == 2)
            cfg.util_tolerance = p.real(tok[1]);
        else
            p.fail("unknown or malformed key '" + key + "'");
    }
    if (cfg.period_weights.empty())
        cfg.period_weights.assign(cfg.periods.size(), 1.0);
    if (cfg.mean_exec.empty())
        for (dtime_t q : cfg.periods)
            cfg.mean_exec.push_back(static_cast<double>(q) * 0.02);
    cfg.validate();
    return cfg;
}

// ----------------------------------------------------------------- files --

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes via a temporary and renames, so partial files never appear.
inline void write_file(const std::string& path, const std::string& data)
{
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw InputError("cannot write " + tmp.string());
        out << data;
    }
    fs::rename(tmp, target);
}

} // namespace cechain

#endif
