#include "fgk/pipeline.hpp"

#include "fgk/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fgk {

void StateWindowConfig::validate() const
{
    if (horizons_s.empty()) throw Error(Errc::BadConfig, "state window needs at least one horizon");
    for (std::size_t i = 0; i < horizons_s.size(); ++i) {
        if (!(horizons_s[i] > 0)) throw Error(Errc::BadConfig, "horizons must be positive");
        if (i && !(horizons_s[i] > horizons_s[i - 1])) throw Error(Errc::BadConfig, "horizons must ascend");
    }
    if (std::abs(observation_horizon_s - horizons_s.front()) > 1e-12)
        throw Error(Errc::BadConfig, "observation horizon must equal the first horizon");
}

StateWindowConfig scaled_windows(double chunk_length_s, const std::vector<double>& multiples)
{
    StateWindowConfig w;
    w.horizons_s.clear();
    for (double k : multiples) w.horizons_s.push_back(k * chunk_length_s);
    w.observation_horizon_s = w.horizons_s.empty() ? 0.0 : w.horizons_s.front();
    w.validate();
    return w;
}

int window_count(std::size_t samples, const StateWindowConfig& win, const ChunkConfig& chunk)
{
    const int s = chunk.stride();
    const int Lmax = samples_for(win.horizons_s.back(), chunk.sample_interval_s);
    if (samples < static_cast<std::size_t>(Lmax)) return 0;
    return static_cast<int>((samples - static_cast<std::size_t>(Lmax)) / static_cast<std::size_t>(s));
}

std::vector<Eigen::MatrixXd> window_blocks(const std::vector<double>& samples, const StateWindowConfig& win,
                                           const ChunkConfig& chunk)
{
    win.validate();
    chunk.validate();
    if (std::abs(win.observation_horizon_s - chunk.chunk_length_s) > 1e-9)
        throw Error(Errc::BadConfig, "observation horizon must equal the chunk length");
    const int count = window_count(samples.size(), win, chunk);
    if (count < 1) throw Error(Errc::FlowTooShort, "flow shorter than the largest state horizon");
    std::vector<Eigen::MatrixXd> blocks;
    for (double h : win.horizons_s)
        blocks.push_back(frames_at(samples, chunk.stride(), samples_for(h, chunk.sample_interval_s), count));
    return blocks;
}

StateWindows build_state_windows(const std::vector<double>& samples, const StateWindowConfig& win,
                                 const ChunkConfig& chunk, const std::vector<Reducer>& reducers)
{
    auto blocks = window_blocks(samples, win, chunk);
    if (reducers.size() != blocks.size()) throw Error(Errc::BadDimension, "one reducer per horizon block expected");
    std::vector<Eigen::MatrixXd> red;
    Eigen::Index width = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        red.push_back(reducers[b].forward(blocks[b]));
        width += red.back().cols();
    }
    StateWindows out;
    out.states.resize(blocks.front().rows(), width);
    Eigen::Index c = 0;
    for (auto& r : red) {
        out.states.middleCols(c, r.cols()) = r;
        c += r.cols();
    }
    out.observations = red.front();
    return out;
}

std::vector<Reducer> fit_window_reducers(const std::vector<std::vector<Eigen::MatrixXd>>& per_flow_blocks, int kept_dim)
{
    if (per_flow_blocks.empty()) throw Error(Errc::InsufficientData, "no flows to fit reducers on");
    const std::size_t nb = per_flow_blocks.front().size();
    std::vector<Reducer> out;
    for (std::size_t b = 0; b < nb; ++b) {
        Eigen::Index rows = 0;
        for (auto& f : per_flow_blocks) rows += f[b].rows();
        Eigen::MatrixXd stacked(rows, per_flow_blocks.front()[b].cols());
        Eigen::Index r = 0;
        for (auto& f : per_flow_blocks) {
            stacked.middleRows(r, f[b].rows()) = f[b];
            r += f[b].rows();
        }
        out.push_back(fit_reducer(stacked, kept_dim));
    }
    return out;
}

TrainingSet training_pairs(const std::vector<FlowTrace>& flows, Preprocessing& prep)
{
    std::vector<std::vector<Eigen::MatrixXd>> blocks;
    for (auto& f : flows) blocks.push_back(window_blocks(f.samples, prep.windows, prep.chunk));
    if (prep.reducers.empty()) prep.reducers = fit_window_reducers(blocks, prep.kept_dim);
    std::vector<StateWindows> sw;
    Eigen::Index pairs = 0;
    for (auto& f : flows) {
        sw.push_back(build_state_windows(f.samples, prep.windows, prep.chunk, prep.reducers));
        pairs += sw.back().states.rows() - 1;
    }
    TrainingSet ts;
    const Eigen::Index d = sw.front().states.cols();
    const Eigen::Index dy = sw.front().observations.cols();
    ts.X.resize(pairs, d);
    ts.X_next.resize(pairs, d);
    ts.Y.resize(pairs, dy);
    Eigen::Index r = 0;
    for (auto& w : sw) {
        const Eigen::Index c = w.states.rows() - 1;
        if (c < 1) continue;
        ts.X.middleRows(r, c) = w.states.topRows(c);
        ts.X_next.middleRows(r, c) = w.states.bottomRows(c);
        ts.Y.middleRows(r, c) = w.observations.topRows(c);
        r += c;
    }
    if (r < 2) throw Error(Errc::FlowTooShort, "not enough training pairs");
    return ts;
}

FlowModel learn_flows(const std::vector<FlowTrace>& flows, const FkkfHyperparams& hp, const LearnOptions& opt,
                      const ChunkConfig& chunk, const StateWindowConfig& win, int kept_dim)
{
    if (flows.empty()) throw Error(Errc::InsufficientData, "no training flows");
    FlowModel fm;
    fm.prep.chunk = chunk;
    fm.prep.windows = win;
    fm.prep.kept_dim = kept_dim;
    TrainingSet ts = training_pairs(flows, fm.prep);
    LearnOptions o = opt;
    o.subspace_size = std::min<int>(opt.subspace_size, static_cast<int>(ts.X.rows()));
    fm.core = learn(ts.X, ts.X_next, ts.Y, hp, o);
    return fm;
}

Eigen::MatrixXd observation_frames(const Preprocessing& prep, const std::vector<double>& samples, int first, int count)
{
    const int s = prep.chunk.stride();
    const int L = prep.chunk.length();
    if (first < 0 || count < 1) throw Error(Errc::BadConfig, "bad observation range");
    std::vector<double> padded(samples.begin(), samples.end());
    const std::size_t need = static_cast<std::size_t>(first + count - 1) * s + L;
    if (padded.size() < need) padded.resize(need, 0.0);
    Eigen::MatrixXd raw(count, frame_dim(L));
    for (int i = 0; i < count; ++i)
        raw.row(i) = forward_frame(padded.data() + static_cast<std::size_t>(first + i) * s, L).transpose();
    return prep.reducers.front().forward(raw);
}

Eigen::MatrixXd observation_jacobian(const Preprocessing& prep)
{
    const Reducer& r = prep.reducers.front();
    const int L = prep.chunk.length();
    Eigen::MatrixXd J(L, r.basis.kept_dim);
    for (int i = 0; i < r.basis.kept_dim; ++i) {
        Eigen::VectorXd col = r.basis.components.col(i);
        for (Eigen::Index k = 0; k < col.size(); ++k) col[k] *= r.standardizer.scale(k);
        const auto x = inverse_frame(col, L);
        J.col(i) = Eigen::Map<const Eigen::VectorXd>(x.data(), L);
    }
    return J;
}

Prediction predict_flow(const FlowModel& model, const std::vector<double>& samples, int first_frame, int observe_steps,
                        int horizon_steps, bool covariance, const ProjectedGains* gains)
{
    const auto& prep = model.prep;
    const int s = prep.chunk.stride();
    const int L = prep.chunk.length();
    Eigen::MatrixXd obs = observation_frames(prep, samples, first_frame, observe_steps);
    FilterRun run = run_filter(model.core, obs, horizon_steps, gains, covariance);
    const int dy = prep.obs_dim();
    Prediction p;
    p.t_last = first_frame + observe_steps - 1;
    p.first_sample = static_cast<long>(p.t_last) * s + L;
    p.horizon_s = horizon_steps * prep.chunk.chunk_interval_s;
    p.mean_frames = run.mean.leftCols(dy);
    if (covariance) p.cov_diag = run.var_diag.leftCols(dy);
    if (horizon_steps == 0) return p;
    Eigen::MatrixXd frames = prep.reducers.front().backward(p.mean_frames);
    std::vector<std::vector<double>> chunks;
    std::vector<long> starts;
    for (int j = 0; j < horizon_steps; ++j) {
        chunks.push_back(inverse_frame(frames.row(j).transpose(), L));
        starts.push_back(static_cast<long>(p.t_last + 1 + j) * s);
    }
    const long end = p.first_sample + static_cast<long>(horizon_steps) * s;
    p.mean_kbit = overlap_average(chunks, starts, p.first_sample, end);
    if (covariance) {
        const Eigen::MatrixXd J2 = observation_jacobian(prep).array().square().matrix();
        std::vector<double> acc(static_cast<std::size_t>(end - p.first_sample), 0.0), cnt(acc.size(), 0.0);
        for (int j = 0; j < horizon_steps; ++j) {
            const Eigen::VectorXd v = J2 * p.cov_diag.row(j).transpose().cwiseMax(0.0);
            for (int t = 0; t < L; ++t) {
                const long k = starts[static_cast<std::size_t>(j)] + t - p.first_sample;
                if (k < 0 || k >= static_cast<long>(acc.size())) continue;
                acc[static_cast<std::size_t>(k)] += v[t];
                cnt[static_cast<std::size_t>(k)] += 1;
            }
        }
        p.var_kbit.resize(acc.size());
        for (std::size_t k = 0; k < acc.size(); ++k) p.var_kbit[k] = cnt[k] > 0 ? acc[k] / (cnt[k] * cnt[k]) : 0.0;
    }
    return p;
}

} // namespace fgk
