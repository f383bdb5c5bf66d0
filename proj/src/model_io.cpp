#include "fgk/model_io.hpp"

#include "fgk/errors.hpp"
#include "fgk/fsutil.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>

namespace fgk {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace {

using nlohmann::json;
constexpr char magic[5] = {'F', 'G', 'K', 'K', 'F'};

struct Writer {
    json dir = json::array();
    std::string blob;

    void put(const std::string& name, const Eigen::MatrixXd& M)
    {
        dir.push_back({{"name", name}, {"rows", M.rows()}, {"cols", M.cols()}, {"offset", blob.size()}});
        // column-major, as stored by Eigen
        blob.append(reinterpret_cast<const char*>(M.data()), static_cast<std::size_t>(M.size()) * sizeof(double));
    }
    void put(const std::string& name, const Eigen::VectorXd& v) { put(name, Eigen::MatrixXd(v)); }
};

struct Reader {
    std::string origin;
    const json* dir = nullptr;
    const char* blob = nullptr;
    std::size_t blob_size = 0;

    Eigen::MatrixXd get(const std::string& name) const
    {
        for (auto& e : *dir) {
            if (e.at("name") != name) continue;
            const auto rows = e.at("rows").get<Eigen::Index>();
            const auto cols = e.at("cols").get<Eigen::Index>();
            const auto off = e.at("offset").get<std::size_t>();
            const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
            if (rows < 0 || cols < 0 || off + bytes > blob_size)
                throw Error(Errc::ParseError, origin + ": matrix " + name + " out of bounds");
            Eigen::MatrixXd M(rows, cols);
            std::memcpy(M.data(), blob + off, bytes);
            return M;
        }
        throw Error(Errc::ParseError, origin + ": missing matrix " + name);
    }
    Eigen::VectorXd vec(const std::string& name) const
    {
        Eigen::MatrixXd M = get(name);
        if (M.cols() != 1 && M.size() != 0) throw Error(Errc::ParseError, origin + ": " + name + " is not a vector");
        return Eigen::Map<Eigen::VectorXd>(M.data(), M.size());
    }
};

const char* regularizer_name(Regularizer r) { return r == Regularizer::ridge ? "ridge" : "subset_of_regressors"; }
const char* selection_name(SubspaceSelection s) { return s == SubspaceSelection::stride ? "stride" : "pivoted_cholesky"; }

json kernel_json(const KernelSpec& k) { return {{"family", "gaussian"}, {"bandwidth", k.bandwidth}, {"scale_factor", k.scale_factor}}; }

KernelSpec kernel_from(const json& j)
{
    KernelSpec k;
    if (j.at("family") != "gaussian") throw Error(Errc::ParseError, "unknown kernel family");
    k.bandwidth = j.at("bandwidth").get<double>();
    k.scale_factor = j.at("scale_factor").get<double>();
    return k;
}

} // namespace

std::string serialize_model(const FlowModel& fm)
{
    const FkkfModel& m = fm.core;
    Writer w;
    w.put("X", m.X);
    w.put("Y", m.Y);
    w.put("Kbar", m.Kbar);
    w.put("Kbar_prime", m.Kbar_prime);
    w.put("G", m.G);
    w.put("T", m.T);
    w.put("O", m.O);
    w.put("V", m.V);
    w.put("n1", m.n1);
    w.put("P1", m.P1);
    w.put("GO", m.GO);
    w.put("OGO", m.OGO);
    w.put("XO", m.XO);
    for (std::size_t b = 0; b < fm.prep.reducers.size(); ++b) {
        const Reducer& r = fm.prep.reducers[b];
        const std::string p = "reducer" + std::to_string(b) + ".";
        w.put(p + "means", r.standardizer.means);
        w.put(p + "stds", r.standardizer.stds);
        w.put(p + "components", r.basis.components);
        w.put(p + "explained_variance_ratio", r.basis.explained_variance_ratio);
    }
    json h;
    h["format"] = "fgkkf-model";
    h["chunk"] = {{"sample_interval_s", fm.prep.chunk.sample_interval_s},
                  {"chunk_interval_s", fm.prep.chunk.chunk_interval_s},
                  {"chunk_length_s", fm.prep.chunk.chunk_length_s}};
    h["windows"] = {{"horizons_s", fm.prep.windows.horizons_s},
                    {"observation_horizon_s", fm.prep.windows.observation_horizon_s}};
    h["kept_dim"] = fm.prep.kept_dim;
    json reds = json::array();
    for (auto& r : fm.prep.reducers) reds.push_back({{"original_dim", r.basis.original_dim}, {"kept_dim", r.basis.kept_dim}});
    h["reducers"] = reds;
    h["subspace_indices"] = m.subspace_indices;
    h["state_kernel"] = kernel_json(m.state_kernel);
    h["obs_kernel"] = kernel_json(m.obs_kernel);
    h["hyper"] = {{"lambda_T", m.hyper.lambda_T}, {"lambda_O", m.hyper.lambda_O}, {"state_bw_scale", m.hyper.state_bw_scale},
                  {"obs_bw_scale", m.hyper.obs_bw_scale}, {"kappa", m.hyper.kappa}};
    const LearnOptions& o = m.options;
    h["options"] = {{"subspace_size", o.subspace_size}, {"regularizer", regularizer_name(o.regularizer)},
                    {"selection", selection_name(o.selection)}, {"selection_tol", o.selection_tol},
                    {"jitter", o.jitter}, {"bandwidth_subset", o.bandwidth_subset}, {"seed", o.seed},
                    {"state_bandwidth", o.state_bandwidth}, {"obs_bandwidth", o.obs_bandwidth}};
    h["matrices"] = w.dir;
    const std::string hs = h.dump();

    std::string out(magic, sizeof magic);
    const std::uint32_t ver = model_format_version;
    const std::uint64_t len = hs.size();
    out.append(reinterpret_cast<const char*>(&ver), sizeof ver);
    out.append(reinterpret_cast<const char*>(&len), sizeof len);
    out += hs;
    out += w.blob;
    return out;
}

FlowModel deserialize_model(const std::string& bytes, const std::string& origin)
{
    const std::size_t head = sizeof magic + sizeof(std::uint32_t) + sizeof(std::uint64_t);
    if (bytes.size() < head || std::memcmp(bytes.data(), magic, sizeof magic) != 0)
        throw Error(Errc::ParseError, origin + ": not a model file");
    std::uint32_t ver;
    std::uint64_t len;
    std::memcpy(&ver, bytes.data() + sizeof magic, sizeof ver);
    std::memcpy(&len, bytes.data() + sizeof magic + sizeof ver, sizeof len);
    if (ver != model_format_version) throw Error(Errc::ParseError, origin + ": unsupported model version " + std::to_string(ver));
    if (len > bytes.size() - head) throw Error(Errc::ParseError, origin + ": truncated header");
    json h;
    try {
        h = json::parse(bytes.substr(head, len));
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, origin + ": " + e.what());
    }
    Reader rd{origin, nullptr, bytes.data() + head + len, bytes.size() - head - len};
    FlowModel fm;
    try {
        rd.dir = &h.at("matrices");
        auto& c = h.at("chunk");
        fm.prep.chunk.sample_interval_s = c.at("sample_interval_s").get<double>();
        fm.prep.chunk.chunk_interval_s = c.at("chunk_interval_s").get<double>();
        fm.prep.chunk.chunk_length_s = c.at("chunk_length_s").get<double>();
        fm.prep.windows.horizons_s = h.at("windows").at("horizons_s").get<std::vector<double>>();
        fm.prep.windows.observation_horizon_s = h.at("windows").at("observation_horizon_s").get<double>();
        fm.prep.kept_dim = h.at("kept_dim").get<int>();
        const auto& reds = h.at("reducers");
        for (std::size_t b = 0; b < reds.size(); ++b) {
            Reducer r;
            const std::string p = "reducer" + std::to_string(b) + ".";
            r.standardizer.means = rd.vec(p + "means");
            r.standardizer.stds = rd.vec(p + "stds");
            r.basis.components = rd.get(p + "components");
            r.basis.explained_variance_ratio = rd.vec(p + "explained_variance_ratio");
            r.basis.original_dim = reds[b].at("original_dim").get<int>();
            r.basis.kept_dim = reds[b].at("kept_dim").get<int>();
            fm.prep.reducers.push_back(std::move(r));
        }
        FkkfModel& m = fm.core;
        m.X = rd.get("X");
        m.Y = rd.get("Y");
        m.Kbar = rd.get("Kbar");
        m.Kbar_prime = rd.get("Kbar_prime");
        m.G = rd.get("G");
        m.T = rd.get("T");
        m.O = rd.get("O");
        m.V = rd.get("V");
        m.n1 = rd.vec("n1");
        m.P1 = rd.get("P1");
        m.GO = rd.get("GO");
        m.OGO = rd.get("OGO");
        m.XO = rd.get("XO");
        m.subspace_indices = h.at("subspace_indices").get<std::vector<int>>();
        m.state_kernel = kernel_from(h.at("state_kernel"));
        m.obs_kernel = kernel_from(h.at("obs_kernel"));
        auto& hp = h.at("hyper");
        m.hyper = {hp.at("lambda_T").get<double>(), hp.at("lambda_O").get<double>(), hp.at("state_bw_scale").get<double>(),
                   hp.at("obs_bw_scale").get<double>(), hp.at("kappa").get<double>()};
        auto& o = h.at("options");
        m.options.subspace_size = o.at("subspace_size").get<int>();
        m.options.regularizer = o.at("regularizer") == "ridge" ? Regularizer::ridge : Regularizer::subset_of_regressors;
        m.options.selection = o.at("selection") == "stride" ? SubspaceSelection::stride : SubspaceSelection::pivoted_cholesky;
        m.options.selection_tol = o.at("selection_tol").get<double>();
        m.options.jitter = o.at("jitter").get<double>();
        m.options.bandwidth_subset = o.at("bandwidth_subset").get<int>();
        m.options.seed = o.at("seed").get<std::uint64_t>();
        m.options.state_bandwidth = o.at("state_bandwidth").get<double>();
        m.options.obs_bandwidth = o.at("obs_bandwidth").get<double>();
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, origin + ": " + e.what());
    }
    try {
        fm.core.check_consistent();
    } catch (const Error& e) {
        throw Error(Errc::ParseError, origin + ": " + e.what());
    }
    return fm;
}

void save_model(const std::string& path, const FlowModel& model) { write_file_atomic(path, serialize_model(model)); }

FlowModel load_model(const std::string& path)
{
    if (!std::filesystem::exists(path)) throw Error(Errc::MissingModel, "model file not found: " + path);
    return deserialize_model(read_file(path), path);
}

} // namespace fgk
