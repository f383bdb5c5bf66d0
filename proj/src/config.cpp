#include "fgk/config.hpp"

#include "fgk/errors.hpp"
#include "fgk/fsutil.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <functional>
#include <memory>
#include <set>

namespace fgk {

using nlohmann::json;

void RunConfig::validate() const
{
    chunk.validate();
    if (std::abs(chunk.sample_interval_s - experiment.sample_interval_s) > 0 ||
        std::abs(chunk.chunk_interval_s - experiment.chunk_interval_s) > 0)
        throw Error(Errc::BadConfig, "chunk and experiment sampling disagree");
    experiment.validate();
    windows().validate();
    hyper.validate();
    search.validate();
    if (clustering.max_groups < 1 || clustering.K < 1 || !(clustering.distance_threshold >= 0))
        throw Error(Errc::BadConfig, "bad clustering options");
    if (synth.groups < 1 || synth.flows_per_group < 2 || !(synth.duration_s > 0) || !(synth.jitter >= 0 && synth.jitter < 1))
        throw Error(Errc::BadConfig, "bad synth options");
    if (paths.format != "csv_binned" && paths.format != "csv_events") throw Error(Errc::BadConfig, "unknown trace format " + paths.format);
}

StateWindowConfig RunConfig::windows() const { return scaled_windows(chunk.chunk_length_s, experiment.horizon_multiples); }

namespace {

const char* reg_name(Regularizer r) { return r == Regularizer::ridge ? "ridge" : "subset_of_regressors"; }
const char* sel_name(SubspaceSelection s) { return s == SubspaceSelection::stride ? "stride" : "pivoted_cholesky"; }
const char* val_name(Validation v) { return v == Validation::holdout_fraction ? "holdout_fraction" : "leave_one_out"; }

json to_json(const RunConfig& c)
{
    const auto& e = c.experiment;
    const auto& l = e.learn;
    json j;
    j["paths"] = {{"input", c.paths.input}, {"output", c.paths.output}, {"model", c.paths.model}, {"format", c.paths.format}};
    j["chunk"] = {{"sample_interval_s", c.chunk.sample_interval_s}, {"chunk_interval_s", c.chunk.chunk_interval_s},
                  {"chunk_length_s", c.chunk.chunk_length_s}};
    j["windows"] = {{"horizon_multiples", e.horizon_multiples}};
    j["experiment"] = {{"observe_steps", e.observe_steps}, {"predict_horizon_s", e.predict_horizon_s},
                       {"chunk_lengths_s", e.chunk_lengths_s}, {"kept_dim", e.kept_dim},
                       {"peak_factor", e.peak_factor}, {"peak_window_s", e.peak_window_s}, {"ar_order", e.ar_order}};
    j["learn"] = {{"subspace_size", l.subspace_size}, {"regularizer", reg_name(l.regularizer)},
                  {"selection", sel_name(l.selection)}, {"selection_tol", l.selection_tol}, {"jitter", l.jitter},
                  {"bandwidth_subset", l.bandwidth_subset}};
    j["hyper"] = {{"lambda_T", c.hyper.lambda_T}, {"lambda_O", c.hyper.lambda_O}, {"state_bw_scale", c.hyper.state_bw_scale},
                  {"obs_bw_scale", c.hyper.obs_bw_scale}, {"kappa", c.hyper.kappa}};
    j["search"] = {{"enabled", c.search_enabled}, {"lambda_T", c.search.lambda_T}, {"lambda_O", c.search.lambda_O},
                   {"state_bw_scale", c.search.state_bw_scale}, {"obs_bw_scale", c.search.obs_bw_scale},
                   {"kappa", c.search.kappa}, {"validation", val_name(c.search_options.validation)},
                   {"holdout_fraction", c.search_options.holdout_fraction}};
    j["clustering"] = {{"max_groups", c.clustering.max_groups}, {"distance_threshold", c.clustering.distance_threshold},
                       {"K", c.clustering.K}, {"from_first_activity", c.clustering.from_first_activity}};
    j["synth"] = {{"groups", c.synth.groups}, {"flows_per_group", c.synth.flows_per_group},
                  {"duration_s", c.synth.duration_s}, {"jitter", c.synth.jitter}, {"template_seed", c.synth.template_seed}};
    j["seed"] = c.seed;
    return j;
}

// walks a tree shaped like to_json's output, rejecting unknown keys
class Src {
public:
    virtual ~Src() = default;
    virtual bool has(const std::string& k) const = 0;
    virtual std::vector<std::string> keys() const = 0;
    virtual std::unique_ptr<Src> child(const std::string& k) const = 0;
    virtual double num(const std::string& k) const = 0;
    virtual std::int64_t integer(const std::string& k) const = 0;
    virtual std::uint64_t uinteger(const std::string& k) const = 0;
    virtual bool boolean(const std::string& k) const = 0;
    virtual std::string str(const std::string& k) const = 0;
    virtual std::vector<double> nums(const std::string& k) const = 0;
    virtual std::string where(const std::string& k) const = 0;
};

class YamlSrc : public Src {
public:
    YamlSrc(YAML::Node n, std::string origin, std::string path) : n_(std::move(n)), origin_(std::move(origin)), path_(std::move(path)) {}
    bool has(const std::string& k) const override { return static_cast<bool>(n_[k]); }
    std::vector<std::string> keys() const override
    {
        std::vector<std::string> out;
        if (!n_.IsMap()) throw Error(Errc::ParseError, origin_ + ": " + (path_.empty() ? "top level" : path_) + " must be a mapping");
        for (auto it = n_.begin(); it != n_.end(); ++it) out.push_back(it->first.as<std::string>());
        return out;
    }
    std::unique_ptr<Src> child(const std::string& k) const override { return std::make_unique<YamlSrc>(n_[k], origin_, path_ + k + "."); }
    double num(const std::string& k) const override { return get<double>(k); }
    std::int64_t integer(const std::string& k) const override { return get<std::int64_t>(k); }
    std::uint64_t uinteger(const std::string& k) const override { return get<std::uint64_t>(k); }
    bool boolean(const std::string& k) const override { return get<bool>(k); }
    std::string str(const std::string& k) const override { return get<std::string>(k); }
    std::vector<double> nums(const std::string& k) const override { return get<std::vector<double>>(k); }
    std::string where(const std::string& k) const override
    {
        const auto m = n_[k].Mark();
        return origin_ + ":" + std::to_string(m.line + 1) + ": " + path_ + k;
    }

private:
    template <class T>
    T get(const std::string& k) const
    {
        try {
            return n_[k].as<T>();
        } catch (const YAML::Exception&) {
            throw Error(Errc::ParseError, where(k) + " has the wrong type");
        }
    }
    YAML::Node n_;
    std::string origin_;
    std::string path_;
};

class JsonSrc : public Src {
public:
    JsonSrc(const json& j, std::string path) : j_(j), path_(std::move(path)) {}
    bool has(const std::string& k) const override { return j_.contains(k); }
    std::vector<std::string> keys() const override
    {
        if (!j_.is_object()) throw Error(Errc::ParseError, path_ + " must be an object");
        std::vector<std::string> out;
        for (auto it = j_.begin(); it != j_.end(); ++it) out.push_back(it.key());
        return out;
    }
    std::unique_ptr<Src> child(const std::string& k) const override { return std::make_unique<JsonSrc>(j_.at(k), path_ + k + "."); }
    double num(const std::string& k) const override { return get<double>(k); }
    std::int64_t integer(const std::string& k) const override { return get<std::int64_t>(k); }
    std::uint64_t uinteger(const std::string& k) const override { return get<std::uint64_t>(k); }
    bool boolean(const std::string& k) const override { return get<bool>(k); }
    std::string str(const std::string& k) const override { return get<std::string>(k); }
    std::vector<double> nums(const std::string& k) const override { return get<std::vector<double>>(k); }
    std::string where(const std::string& k) const override { return path_ + k; }

private:
    template <class T>
    T get(const std::string& k) const
    {
        try {
            return j_.at(k).get<T>();
        } catch (const json::exception&) {
            throw Error(Errc::ParseError, where(k) + " has the wrong type");
        }
    }
    const json& j_;
    std::string path_;
};

void check_keys(const Src& s, const std::set<std::string>& allowed)
{
    for (auto& k : s.keys())
        if (!allowed.count(k)) throw Error(Errc::ParseError, s.where(k) + " is not a known setting");
}

RunConfig from_src(const Src& s)
{
    RunConfig c;
    check_keys(s, {"paths", "chunk", "windows", "experiment", "learn", "hyper", "search", "clustering", "synth", "seed"});
    if (s.has("seed")) c.seed = s.uinteger("seed");
    if (s.has("paths")) {
        auto p = s.child("paths");
        check_keys(*p, {"input", "output", "model", "format"});
        if (p->has("input")) c.paths.input = p->str("input");
        if (p->has("output")) c.paths.output = p->str("output");
        if (p->has("model")) c.paths.model = p->str("model");
        if (p->has("format")) c.paths.format = p->str("format");
    }
    if (s.has("chunk")) {
        auto p = s.child("chunk");
        check_keys(*p, {"sample_interval_s", "chunk_interval_s", "chunk_length_s"});
        if (p->has("sample_interval_s")) c.chunk.sample_interval_s = p->num("sample_interval_s");
        if (p->has("chunk_interval_s")) c.chunk.chunk_interval_s = p->num("chunk_interval_s");
        if (p->has("chunk_length_s")) c.chunk.chunk_length_s = p->num("chunk_length_s");
    }
    auto& e = c.experiment;
    e.sample_interval_s = c.chunk.sample_interval_s;
    e.chunk_interval_s = c.chunk.chunk_interval_s;
    if (s.has("windows")) {
        auto p = s.child("windows");
        check_keys(*p, {"horizon_multiples"});
        if (p->has("horizon_multiples")) e.horizon_multiples = p->nums("horizon_multiples");
    }
    if (s.has("experiment")) {
        auto p = s.child("experiment");
        check_keys(*p, {"observe_steps", "predict_horizon_s", "chunk_lengths_s", "kept_dim", "peak_factor", "peak_window_s", "ar_order"});
        if (p->has("observe_steps")) e.observe_steps = static_cast<int>(p->integer("observe_steps"));
        if (p->has("predict_horizon_s")) e.predict_horizon_s = p->num("predict_horizon_s");
        if (p->has("chunk_lengths_s")) e.chunk_lengths_s = p->nums("chunk_lengths_s");
        if (p->has("kept_dim")) e.kept_dim = static_cast<int>(p->integer("kept_dim"));
        if (p->has("peak_factor")) e.peak_factor = p->num("peak_factor");
        if (p->has("peak_window_s")) e.peak_window_s = p->num("peak_window_s");
        if (p->has("ar_order")) e.ar_order = static_cast<int>(p->integer("ar_order"));
    }
    if (s.has("learn")) {
        auto p = s.child("learn");
        check_keys(*p, {"subspace_size", "regularizer", "selection", "selection_tol", "jitter", "bandwidth_subset"});
        auto& l = e.learn;
        if (p->has("subspace_size")) l.subspace_size = static_cast<int>(p->integer("subspace_size"));
        if (p->has("regularizer")) {
            const auto v = p->str("regularizer");
            if (v == "subset_of_regressors") l.regularizer = Regularizer::subset_of_regressors;
            else if (v == "ridge") l.regularizer = Regularizer::ridge;
            else throw Error(Errc::ParseError, p->where("regularizer") + ": unknown value " + v);
        }
        if (p->has("selection")) {
            const auto v = p->str("selection");
            if (v == "pivoted_cholesky") l.selection = SubspaceSelection::pivoted_cholesky;
            else if (v == "stride") l.selection = SubspaceSelection::stride;
            else throw Error(Errc::ParseError, p->where("selection") + ": unknown value " + v);
        }
        if (p->has("selection_tol")) l.selection_tol = p->num("selection_tol");
        if (p->has("jitter")) l.jitter = p->num("jitter");
        if (p->has("bandwidth_subset")) l.bandwidth_subset = static_cast<int>(p->integer("bandwidth_subset"));
    }
    if (s.has("hyper")) {
        auto p = s.child("hyper");
        check_keys(*p, {"lambda_T", "lambda_O", "state_bw_scale", "obs_bw_scale", "kappa"});
        if (p->has("lambda_T")) c.hyper.lambda_T = p->num("lambda_T");
        if (p->has("lambda_O")) c.hyper.lambda_O = p->num("lambda_O");
        if (p->has("state_bw_scale")) c.hyper.state_bw_scale = p->num("state_bw_scale");
        if (p->has("obs_bw_scale")) c.hyper.obs_bw_scale = p->num("obs_bw_scale");
        if (p->has("kappa")) c.hyper.kappa = p->num("kappa");
    }
    if (s.has("search")) {
        auto p = s.child("search");
        check_keys(*p, {"enabled", "lambda_T", "lambda_O", "state_bw_scale", "obs_bw_scale", "kappa", "validation", "holdout_fraction"});
        if (p->has("enabled")) c.search_enabled = p->boolean("enabled");
        if (p->has("lambda_T")) c.search.lambda_T = p->nums("lambda_T");
        if (p->has("lambda_O")) c.search.lambda_O = p->nums("lambda_O");
        if (p->has("state_bw_scale")) c.search.state_bw_scale = p->nums("state_bw_scale");
        if (p->has("obs_bw_scale")) c.search.obs_bw_scale = p->nums("obs_bw_scale");
        if (p->has("kappa")) c.search.kappa = p->nums("kappa");
        if (p->has("validation")) {
            const auto v = p->str("validation");
            if (v == "leave_one_out") c.search_options.validation = Validation::leave_one_out;
            else if (v == "holdout_fraction") c.search_options.validation = Validation::holdout_fraction;
            else throw Error(Errc::ParseError, p->where("validation") + ": unknown value " + v);
        }
        if (p->has("holdout_fraction")) c.search_options.holdout_fraction = p->num("holdout_fraction");
    }
    if (s.has("clustering")) {
        auto p = s.child("clustering");
        check_keys(*p, {"max_groups", "distance_threshold", "K", "from_first_activity"});
        if (p->has("max_groups")) c.clustering.max_groups = static_cast<int>(p->integer("max_groups"));
        if (p->has("distance_threshold")) c.clustering.distance_threshold = p->num("distance_threshold");
        if (p->has("K")) c.clustering.K = static_cast<int>(p->integer("K"));
        if (p->has("from_first_activity")) c.clustering.from_first_activity = p->boolean("from_first_activity");
    }
    if (s.has("synth")) {
        auto p = s.child("synth");
        check_keys(*p, {"groups", "flows_per_group", "duration_s", "jitter", "template_seed"});
        if (p->has("groups")) c.synth.groups = static_cast<int>(p->integer("groups"));
        if (p->has("flows_per_group")) c.synth.flows_per_group = static_cast<int>(p->integer("flows_per_group"));
        if (p->has("duration_s")) c.synth.duration_s = p->num("duration_s");
        if (p->has("jitter")) c.synth.jitter = p->num("jitter");
        if (p->has("template_seed")) c.synth.template_seed = p->uinteger("template_seed");
    }
    e.learn.seed = c.seed;
    try {
        c.validate();
    } catch (const Error& err) {
        if (err.code() == Errc::ParseError) throw;
        throw Error(Errc::BadConfig, err.what());
    }
    return c;
}

} // namespace

RunConfig parse_config(const std::string& yaml_text, const std::string& origin)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw Error(Errc::ParseError, origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    return from_src(YamlSrc(root, origin, ""));
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path), path); }

std::string canonical_json(const RunConfig& c) { return to_json(c).dump(); }

RunConfig config_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("config json: ") + e.what());
    }
    return from_src(JsonSrc(j, ""));
}

std::string config_hash(const RunConfig& c)
{
    // output path does not change results
    RunConfig k = c;
    k.paths.output.clear();
    return hex64(fnv1a64(canonical_json(k)));
}

std::string format_yaml(const RunConfig& c)
{
    YAML::Emitter em;
    std::function<void(const json&)> emit = [&](const json& j) {
        if (j.is_object()) {
            em << YAML::BeginMap;
            for (auto it = j.begin(); it != j.end(); ++it) {
                em << YAML::Key << it.key() << YAML::Value;
                emit(it.value());
            }
            em << YAML::EndMap;
        } else if (j.is_array()) {
            em << YAML::Flow << YAML::BeginSeq;
            for (auto& v : j) emit(v);
            em << YAML::EndSeq;
        } else if (j.is_string()) {
            em << j.get<std::string>();
        } else if (j.is_boolean()) {
            em << j.get<bool>();
        } else if (j.is_number_unsigned()) {
            em << j.get<std::uint64_t>();
        } else if (j.is_number_integer()) {
            em << j.get<std::int64_t>();
        } else {
            em << fmt_num(j.get<double>());
        }
    };
    emit(to_json(c));
    return std::string(em.c_str()) + "\n";
}

} // namespace fgk
