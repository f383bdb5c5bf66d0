#include "fgk/clustering.hpp"
#include "fgk/config.hpp"
#include "fgk/errors.hpp"
#include "fgk/evaluation.hpp"
#include "fgk/fsutil.hpp"
#include "fgk/hyperopt.hpp"
#include "fgk/model_io.hpp"
#include "fgk/pipeline.hpp"
#include "fgk/synth.hpp"
#include "fgk/trace_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace fgk;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string input;
    std::string format;
};

struct Run {
    RunConfig cfg;
    std::string hash;
    std::string command;
    nlohmann::json outputs = nlohmann::json::array();

    fs::path out_dir() const { return cfg.paths.output.empty() ? fs::path(".") : fs::path(cfg.paths.output); }

    void write(const std::string& name, const std::string& content)
    {
        const fs::path p = out_dir() / name;
        write_file_atomic(p.string(), content);
        outputs.push_back({{"file", name}, {"fnv1a64", hex64(fnv1a64(content))}, {"bytes", content.size()}});
    }

    void manifest()
    {
        nlohmann::json m;
        m["command"] = command;
        m["config_hash"] = hash;
        m["seed"] = cfg.seed;
        m["config"] = nlohmann::json::parse(canonical_json(cfg));
        m["outputs"] = outputs;
        write_file_atomic((out_dir() / ("manifest_" + command + ".json")).string(), m.dump(2) + "\n");
    }
};

Run make_run(const Globals& g, const std::string& command)
{
    Run r;
    r.command = command;
    r.cfg = g.config.empty() ? parse_config("") : load_config(g.config);
    if (g.seed) {
        r.cfg.seed = *g.seed;
        r.cfg.experiment.learn.seed = *g.seed;
    }
    if (!g.out.empty()) r.cfg.paths.output = g.out;
    if (!g.input.empty()) r.cfg.paths.input = g.input;
    if (!g.format.empty()) r.cfg.paths.format = g.format;
    r.cfg.validate();
    r.hash = config_hash(r.cfg);
    std::cout << "config_hash " << r.hash << "\n";
    return r;
}

TraceFormat format_of(const std::string& s)
{
    if (s == "csv_events") return TraceFormat::csv_events;
    return TraceFormat::csv_binned;
}

std::vector<FlowTrace> load_input(const RunConfig& c)
{
    if (c.paths.input.empty()) throw Error(Errc::IoError, "no input given (--input or paths.input)");
    const fs::path in(c.paths.input);
    if (!fs::exists(in)) throw Error(Errc::IoError, "input not found: " + in.string());
    std::vector<std::string> files;
    if (fs::is_directory(in)) {
        for (auto& e : fs::directory_iterator(in))
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(in.string());
    }
    std::vector<FlowTrace> all;
    for (auto& f : files) {
        auto part = load_traces(f, format_of(c.paths.format), c.chunk.sample_interval_s);
        all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    std::stable_sort(all.begin(), all.end(), [](const FlowTrace& a, const FlowTrace& b) {
        if (a.key != b.key) return a.key < b.key;
        return a.start_time < b.start_time;
    });
    return all;
}

// group_id -> member flows, read from an assignment file
std::map<int, std::vector<FlowTrace>> groups_from(const std::vector<FlowTrace>& flows, const std::string& assignments)
{
    std::map<std::string, const FlowTrace*> by_label;
    for (auto& f : flows) by_label[flow_label(f.key)] = &f;
    std::map<int, std::vector<FlowTrace>> out;
    std::istringstream in(read_file(assignments));
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (ln == 1 || line.empty() || line[0] == '#') continue;
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw Error(Errc::ParseError, assignments + ":" + std::to_string(ln) + ": expected flow_id,group_id,distance");
        const std::string id = line.substr(0, c1);
        int gid;
        try {
            gid = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, assignments + ":" + std::to_string(ln) + ": bad group id");
        }
        auto it = by_label.find(id);
        if (it == by_label.end()) throw Error(Errc::ParseError, assignments + ":" + std::to_string(ln) + ": unknown flow " + id);
        if (gid >= 0) out[gid].push_back(*it->second);
    }
    return out;
}

std::map<int, std::vector<FlowTrace>> resolve_groups(const RunConfig& c, const std::vector<FlowTrace>& flows,
                                                     const std::string& assignments)
{
    if (!assignments.empty()) return groups_from(flows, assignments);
    const Clustering cl = cluster(flows, c.chunk, c.clustering);
    std::map<int, std::vector<FlowTrace>> out;
    for (auto& g : cl.groups)
        for (int i : g.members) out[g.group_id].push_back(flows[static_cast<std::size_t>(i)]);
    return out;
}

HyperSource hyper_source(const RunConfig& c)
{
    if (c.search_enabled) return searched_hyper(c.search, c.experiment, c.search_options);
    return fixed_hyper(c.hyper);
}

int cmd_ingest(const Globals& g)
{
    Run r = make_run(g, "ingest");
    std::vector<FlowTrace> flows;
    const fs::path in(r.cfg.paths.input);
    if (!(fs::is_directory(in) && fs::is_empty(in))) flows = load_input(r.cfg);
    int buckets[4] = {0, 0, 0, 0};
    for (auto& f : flows) {
        const double d = f.duration();
        buckets[d < 0.1 ? 0 : d < 1.0 ? 1 : d < 100.0 ? 2 : 3]++;
    }
    r.write("traces.csv", format_binned(flows));
    std::string s = fmt::format("# config_hash,{}\nduration_group,flows,share\n", r.hash);
    static const char* names[] = {"<0.1s", "0.1s-1s", "1s-100s", ">=100s"};
    for (int b = 0; b < 4; ++b)
        s += fmt::format("{},{},{}\n", names[b], buckets[b],
                         fmt_num(flows.empty() ? 0.0 : static_cast<double>(buckets[b]) / static_cast<double>(flows.size())));
    s += fmt::format("total,{},{}\n", flows.size(), flows.empty() ? "0" : "1");
    r.write("ingest_summary.csv", s);
    r.manifest();
    std::cout << "flows " << flows.size() << "\n";
    return 0;
}

int cmd_synth(const Globals& g)
{
    Run r = make_run(g, "synth");
    const auto& sc = r.cfg.synth;
    const auto tpls = random_templates(sc.groups, sc.template_seed, sc.jitter);
    std::vector<FlowTrace> all;
    std::string t = fmt::format("# config_hash,{}\ngroup,rise_s,body_s,peak_kbit,impulse_period_s,impulse_jitter,amplitude_jitter,gap_s\n", r.hash);
    for (int gi = 0; gi < sc.groups; ++gi) {
        auto flows = generate_group(tpls[static_cast<std::size_t>(gi)], sc.flows_per_group, sc.duration_s,
                                    r.cfg.chunk.sample_interval_s, r.cfg.seed, gi);
        all.insert(all.end(), flows.begin(), flows.end());
        const auto& p = tpls[static_cast<std::size_t>(gi)];
        t += fmt::format("{},{},{},{},{},{},{},{}\n", gi, fmt_num(p.rise_duration_s), fmt_num(p.body_duration_s),
                         fmt_num(p.peak_kbit), fmt_num(p.impulse_period_s), fmt_num(p.impulse_jitter),
                         fmt_num(p.amplitude_jitter), fmt_num(p.inter_burst_gap_s));
    }
    r.write("synth_traces.csv", format_binned(all));
    r.write("synth_templates.csv", t);
    r.manifest();
    std::cout << "flows " << all.size() << "\n";
    return 0;
}

int cmd_cluster(const Globals& g)
{
    Run r = make_run(g, "cluster");
    const auto flows = load_input(r.cfg);
    const Clustering c = cluster(flows, r.cfg.chunk, r.cfg.clustering);
    r.write("assignments.csv", format_assignments(flows, c));
    r.manifest();
    std::cout << "groups " << c.groups.size() << " ungrouped " << c.ungrouped.size() << "\n";
    return 0;
}

int cmd_learn(const Globals& g, const std::string& assignments, int group, const std::string& model_path)
{
    Run r = make_run(g, "learn");
    auto flows = load_input(r.cfg);
    if (group >= 0) {
        if (assignments.empty()) throw Error(Errc::BadConfig, "--group needs --assignments");
        auto groups = groups_from(flows, assignments);
        if (!groups.count(group)) throw Error(Errc::InsufficientGroup, fmt::format("group {} not found", group));
        flows = groups[group];
    }
    const FkkfHyperparams hp = r.cfg.search_enabled ? hyper_source(r.cfg)(flows, r.cfg.chunk.chunk_length_s) : r.cfg.hyper;
    const FlowModel m = learn_flows(flows, hp, r.cfg.experiment.learn, r.cfg.chunk, r.cfg.windows(), r.cfg.experiment.kept_dim);
    std::string path = !model_path.empty() ? model_path : !r.cfg.paths.model.empty() ? r.cfg.paths.model : (r.out_dir() / "model.fgk").string();
    const std::string bytes = serialize_model(m);
    write_file_atomic(path, bytes);
    r.outputs.push_back({{"file", path}, {"fnv1a64", hex64(fnv1a64(bytes))}, {"bytes", bytes.size()}});
    r.manifest();
    std::cout << fmt::format("model {} m={} n={} d={}\n", path, m.core.m(), m.core.n(), m.core.state_dim());
    return 0;
}

int cmd_predict(const Globals& g, const std::string& model_path, const std::string& flow_id, int start_frame,
                int observe, bool per_sample)
{
    Run r = make_run(g, "predict");
    const std::string path = !model_path.empty() ? model_path : !r.cfg.paths.model.empty() ? r.cfg.paths.model : (r.out_dir() / "model.fgk").string();
    const FlowModel m = load_model(path);
    const auto flows = load_input(r.cfg);
    if (flows.empty()) throw Error(Errc::EmptyFlow, "input has no flows");
    const FlowTrace* f = &flows.front();
    if (!flow_id.empty()) {
        f = nullptr;
        for (auto& x : flows)
            if (flow_label(x.key) == flow_id) f = &x;
        if (!f && !flow_id.empty() && std::all_of(flow_id.begin(), flow_id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            const unsigned long i = std::stoul(flow_id);
            if (i < flows.size()) f = &flows[i];
        }
        if (!f) throw Error(Errc::IoError, "flow not found: " + flow_id);
    }
    const int k = observe > 0 ? observe : r.cfg.experiment.observe_steps;
    int first = start_frame;
    if (first < 0) {
        auto ps = locate_peak_start(f->samples, m.prep.chunk, r.cfg.experiment.peak_factor, r.cfg.experiment.peak_window_s);
        first = ps ? *ps : 0;
    }
    const int steps = samples_for(r.cfg.experiment.predict_horizon_s, m.prep.chunk.chunk_interval_s);
    const Prediction p = predict_flow(m, f->samples, first, k, steps, true);
    const int s = m.prep.chunk.stride();
    const double ts = m.prep.chunk.sample_interval_s;
    std::string out = fmt::format("# config_hash,{}\n# flow,{}\n# first_frame,{}\n# observe_steps,{}\nstep,t,predicted_kbit,variance\n",
                                  r.hash, flow_label(f->key), first, k);
    for (int j = 0; j < steps; ++j) {
        double mu = 0, var = 0;
        for (int i = 0; i < s; ++i) {
            mu += p.mean_kbit[static_cast<std::size_t>(j * s + i)];
            var += p.var_kbit[static_cast<std::size_t>(j * s + i)];
        }
        out += fmt::format("{},{},{},{}\n", j, fmt_num(static_cast<double>(p.first_sample + j * s) * ts), fmt_num(mu / s), fmt_num(var / s));
    }
    r.write("predictions.csv", out);
    if (per_sample) {
        std::string ps = "t,predicted_kbit,variance,actual_kbit\n";
        for (std::size_t i = 0; i < p.mean_kbit.size(); ++i) {
            const long t = p.first_sample + static_cast<long>(i);
            const double act = t < static_cast<long>(f->samples.size()) ? f->samples[static_cast<std::size_t>(t)] : 0.0;
            ps += fmt::format("{},{},{},{}\n", fmt_num(static_cast<double>(t) * ts), fmt_num(p.mean_kbit[i]), fmt_num(p.var_kbit[i]), fmt_num(act));
        }
        r.write("prediction_samples.csv", ps);
    }
    r.manifest();
    std::cout << "rows " << steps << "\n";
    return 0;
}

int cmd_evaluate(const Globals& g, const std::string& assignments, bool traces)
{
    Run r = make_run(g, "evaluate");
    const auto flows = load_input(r.cfg);
    const auto groups = resolve_groups(r.cfg, flows, assignments);
    const HyperSource hs = hyper_source(r.cfg);
    std::vector<GroupReport> reports;
    for (auto& [gid, members] : groups) {
        SweepResult sw;
        reports.push_back(make_group_report(gid, members, r.cfg.experiment, hs, &sw));
        std::cout << fmt::format("group {} {} error {:+.4f} constant {:+.4f} w {}\n", gid, quality_name(reports.back().quality),
                                 reports.back().pred_error_optimal, reports.back().constant_error, fmt_num(sw.optimal_s));
        if (traces)
            for (auto& s : sw.optimal().splits)
                if (!s.excluded)
                    r.write(fmt::format("traces/group{}_split{}.csv", gid, s.test_index), format_split_trace(s, r.cfg.chunk.sample_interval_s));
    }
    r.write("report.csv", format_report(reports, {r.cfg.seed, r.hash}));
    r.write("baselines.csv", format_baselines(reports));
    r.manifest();
    std::cout << fmt::format("mean optimal chunk length {}\n", fmt_num(mean_optimal_chunk_length(reports)));
    return 0;
}

int cmd_sweep(const Globals& g, const std::string& assignments)
{
    Run r = make_run(g, "sweep");
    const auto flows = load_input(r.cfg);
    const auto groups = resolve_groups(r.cfg, flows, assignments);
    const HyperSource hs = hyper_source(r.cfg);
    std::string out = fmt::format("# config_hash,{}\ngroup_id,chunk_len_s,mean_error,constant_error,ar_error,excluded,optimal\n", r.hash);
    for (auto& [gid, members] : groups) {
        const SweepResult sw = chunk_length_sweep(members, r.cfg.experiment, r.cfg.experiment.chunk_lengths_s, hs);
        for (auto& e : sw.per_length)
            out += fmt::format("{},{},{},{},{},{},{}\n", gid, fmt_num(e.chunk_length_s), fmt_num(e.mean_error), fmt_num(e.mean_constant),
                               fmt_num(e.mean_ar), e.excluded, e.chunk_length_s == sw.optimal_s ? 1 : 0);
    }
    r.write("sweep.csv", out);
    r.manifest();
    return 0;
}

int exit_code(Errc c)
{
    switch (c) {
    case Errc::ParseError: return 2;
    case Errc::MissingModel: return 3;
    case Errc::NumericalFailure: return 4;
    default: return 1;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"fine grained kernel Kalman filter for flow traffic prediction"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "YAML run configuration");
    app.add_option("--seed", g.seed, "seed override");
    app.add_option("--out", g.out, "output directory");

    auto add_input = [&](CLI::App* c) {
        c->add_option("--input", g.input, "trace file or directory");
        c->add_option("--format", g.format, "csv_binned or csv_events");
    };
    std::string assignments, model_path, flow_id;
    int group = -1, start_frame = -1, observe = 0;
    bool per_sample = false, traces = false;

    auto* ingest = app.add_subcommand("ingest", "normalize raw traces into a binned store");
    add_input(ingest);
    auto* synth = app.add_subcommand("synth", "generate synthetic flow groups");
    auto* clus = app.add_subcommand("cluster", "group flows by spectral similarity");
    add_input(clus);
    auto* learnc = app.add_subcommand("learn", "learn a model from flows");
    add_input(learnc);
    learnc->add_option("--assignments", assignments, "group assignment CSV");
    learnc->add_option("--group", group, "learn on one group only");
    learnc->add_option("--model", model_path, "model output path");
    auto* pred = app.add_subcommand("predict", "forecast a flow from an observed prefix");
    add_input(pred);
    pred->add_option("--model", model_path, "model file");
    pred->add_option("--flow", flow_id, "flow index or label (default: first flow)");
    pred->add_option("--start-frame", start_frame, "first observed frame (default: peak start)");
    pred->add_option("--observe", observe, "observed frames");
    pred->add_flag("--samples", per_sample, "also write per-sample predictions");
    auto* eval = app.add_subcommand("evaluate", "leave-one-out evaluation report");
    add_input(eval);
    eval->add_option("--assignments", assignments, "group assignment CSV (default: cluster)");
    eval->add_flag("--traces", traces, "write per-split traces");
    auto* sweep = app.add_subcommand("sweep", "chunk length sweep per group");
    add_input(sweep);
    sweep->add_option("--assignments", assignments, "group assignment CSV (default: cluster)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 64;
    }
    try {
        if (*ingest) return cmd_ingest(g);
        if (*synth) return cmd_synth(g);
        if (*clus) return cmd_cluster(g);
        if (*learnc) return cmd_learn(g, assignments, group, model_path);
        if (*pred) return cmd_predict(g, model_path, flow_id, start_frame, observe, per_sample);
        if (*eval) return cmd_evaluate(g, assignments, traces);
        if (*sweep) return cmd_sweep(g, assignments);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
