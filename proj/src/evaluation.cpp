#include "fgk/evaluation.hpp"

#include "fgk/errors.hpp"
#include "fgk/reduction.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fgk {

std::string quality_name(Quality q)
{
    switch (q) {
    case Quality::good: return "good";
    case Quality::moderate: return "moderate";
    case Quality::bad: return "bad";
    }
    return "bad";
}

namespace {

double max_of(const std::vector<double>& v, const char* what)
{
    if (v.empty()) throw Error(Errc::UndefinedError, std::string(what) + " series is empty");
    return *std::max_element(v.begin(), v.end());
}

} // namespace

double peak_prediction_error(const std::vector<double>& predicted, const std::vector<double>& actual)
{
    const double a = max_of(actual, "actual");
    if (!(a > 0)) throw Error(Errc::UndefinedError, "no peak in the actual horizon");
    return (max_of(predicted, "predicted") - a) / a;
}

double constant_error(const std::vector<double>& observed_prefix, const std::vector<double>& actual)
{
    const double a = max_of(actual, "actual");
    if (!(a > 0)) throw Error(Errc::UndefinedError, "no peak in the actual horizon");
    return (max_of(observed_prefix, "observed") - a) / a;
}

Quality quality_label(double pred_error, double const_error)
{
    const double e = std::abs(pred_error);
    if (e > 0.5 || e >= std::abs(const_error)) return Quality::bad;
    if (e < 0.2) return Quality::good;
    return Quality::moderate;
}

std::vector<double> ar_baseline(const std::vector<double>& observed, int horizon_steps, int order)
{
    if (order < 1) throw Error(Errc::BadConfig, "AR order must be positive");
    if (static_cast<int>(observed.size()) <= order) throw Error(Errc::InsufficientData, "series not longer than AR order");
    const int N = static_cast<int>(observed.size());
    const int rows = N - order;
    Eigen::MatrixXd A(rows, order);
    Eigen::VectorXd b(rows);
    for (int r = 0; r < rows; ++r) {
        for (int k = 0; k < order; ++k) A(r, k) = observed[static_cast<std::size_t>(r + order - 1 - k)];
        b[r] = observed[static_cast<std::size_t>(r + order)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon_steps));
    if (qr.rank() < order) {
        out.assign(static_cast<std::size_t>(horizon_steps), std::max(0.0, observed.back()));
        return out;
    }
    const Eigen::VectorXd phi = qr.solve(b);
    std::vector<double> hist(observed.end() - order, observed.end());
    for (int h = 0; h < horizon_steps; ++h) {
        double v = 0;
        for (int k = 0; k < order; ++k) v += phi[k] * hist[hist.size() - 1 - static_cast<std::size_t>(k)];
        v = std::max(0.0, v);
        out.push_back(v);
        hist.push_back(v);
    }
    return out;
}

std::optional<int> locate_peak_start(const std::vector<double>& samples, const ChunkConfig& chunk, double factor,
                                     double window_s)
{
    if (samples.empty()) return std::nullopt;
    const int s = chunk.stride();
    const int L = window_s > 0 ? samples_for(window_s, chunk.sample_interval_s) : chunk.length();
    const std::size_t N = samples.size();
    const std::size_t frames = (N + static_cast<std::size_t>(s) - 1) / static_cast<std::size_t>(s);
    std::vector<double> sums(frames, 0.0);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t a = t * static_cast<std::size_t>(s);
        const std::size_t b = std::min(N, a + static_cast<std::size_t>(L));
        sums[t] = std::accumulate(samples.begin() + static_cast<long>(a), samples.begin() + static_cast<long>(b), 0.0);
    }
    std::vector<double> sorted = sums;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    const double med = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    const double th = factor * med;
    for (std::size_t t = 0; t < frames; ++t)
        if (sums[t] > th) return static_cast<int>(t);
    return std::nullopt;
}

void ExperimentConfig::validate() const
{
    if (observe_steps < 3) throw Error(Errc::BadConfig, "observe_steps must be at least 3");
    if (!(predict_horizon_s > 0)) throw Error(Errc::BadConfig, "predict_horizon_s must be positive");
    if (chunk_lengths_s.empty()) throw Error(Errc::BadConfig, "chunk length sweep is empty");
    for (double w : chunk_lengths_s) chunk(w).validate();
    samples_for(predict_horizon_s, chunk_interval_s);
    if (kept_dim < 1) throw Error(Errc::BadConfig, "kept_dim must be positive");
    if (!(peak_factor > 0)) throw Error(Errc::BadConfig, "peak_factor must be positive");
    if (ar_order < 1) throw Error(Errc::BadConfig, "ar_order must be positive");
    if (learn.subspace_size < 1) throw Error(Errc::BadConfig, "subspace_size must be positive");
}

ChunkConfig ExperimentConfig::chunk(double w) const
{
    ChunkConfig c;
    c.sample_interval_s = sample_interval_s;
    c.chunk_interval_s = chunk_interval_s;
    c.chunk_length_s = w;
    return c;
}

int ExperimentConfig::horizon_steps() const { return samples_for(predict_horizon_s, chunk_interval_s); }
int ExperimentConfig::horizon_samples() const { return samples_for(predict_horizon_s, sample_interval_s); }

SplitResult evaluate_split(const std::vector<FlowTrace>& train, const FlowTrace& test, double w,
                           const FkkfHyperparams& hp, const ExperimentConfig& cfg, int test_index)
{
    SplitResult r;
    r.test_index = test_index;
    const ChunkConfig ch = cfg.chunk(w);
    auto ps = locate_peak_start(test.samples, ch, cfg.peak_factor, cfg.peak_window_s);
    if (!ps) {
        r.excluded = true;
        r.reason = "no peak start";
        return r;
    }
    r.peak_start = *ps;
    const int s = ch.stride();
    const int L = ch.length();
    const long t_last = *ps + cfg.observe_steps - 1;
    r.obs_end = t_last * s + L;
    const long H = cfg.horizon_samples();
    const long N = static_cast<long>(test.samples.size());
    if (r.obs_end >= N) {
        r.excluded = true;
        r.reason = "peak start too close to the end";
        return r;
    }
    const long act_end = std::min(N, r.obs_end + H);
    r.actual.assign(test.samples.begin() + r.obs_end, test.samples.begin() + act_end);
    if (!(*std::max_element(r.actual.begin(), r.actual.end()) > 0)) {
        r.excluded = true;
        r.reason = "no peak in horizon";
        return r;
    }
    const std::vector<double> prefix(test.samples.begin(), test.samples.begin() + r.obs_end);

    const FlowModel model = learn_flows(train, hp, cfg.learn, ch, scaled_windows(w, cfg.horizon_multiples), cfg.kept_dim);
    const Prediction p = predict_flow(model, test.samples, *ps, cfg.observe_steps, cfg.horizon_steps(), false);
    r.predicted.assign(p.mean_kbit.begin(), p.mean_kbit.begin() + static_cast<long>(r.actual.size()));
    r.pred_error = peak_prediction_error(r.predicted, r.actual);
    r.const_error = constant_error(prefix, r.actual);
    r.ar_predicted = ar_baseline(prefix, static_cast<int>(r.actual.size()), cfg.ar_order);
    r.ar_error = peak_prediction_error(r.ar_predicted, r.actual);
    return r;
}

HyperSource fixed_hyper(const FkkfHyperparams& hp)
{
    return [hp](const std::vector<FlowTrace>&, double) { return hp; };
}

GroupExperiment run_group_experiment(const std::vector<FlowTrace>& group, double w, const ExperimentConfig& cfg,
                                     const HyperSource& hyper)
{
    cfg.validate();
    auto splits = leave_one_out_splits(group);
    GroupExperiment g;
    g.chunk_length_s = w;
    double se = 0, sc = 0, sa = 0;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        const FkkfHyperparams hp = hyper(splits[i].train, w);
        SplitResult r = evaluate_split(splits[i].train, splits[i].test, w, hp, cfg, static_cast<int>(i));
        if (r.excluded) {
            ++g.excluded;
        } else {
            se += r.pred_error;
            sc += r.const_error;
            sa += r.ar_error;
        }
        g.splits.push_back(std::move(r));
    }
    if (g.used() == 0) throw Error(Errc::UndefinedError, "no split of the group has a detectable peak rise");
    g.mean_error = se / g.used();
    g.mean_constant = sc / g.used();
    g.mean_ar = sa / g.used();
    return g;
}

const GroupExperiment& SweepResult::optimal() const
{
    const GroupExperiment* g = at(optimal_s);
    if (!g) throw Error(Errc::UndefinedError, "sweep is empty");
    return *g;
}

const GroupExperiment* SweepResult::at(double w) const
{
    for (auto& g : per_length)
        if (std::abs(g.chunk_length_s - w) < 1e-12) return &g;
    return nullptr;
}

SweepResult chunk_length_sweep(const std::vector<FlowTrace>& group, const ExperimentConfig& cfg,
                               const std::vector<double>& lengths, const HyperSource& hyper)
{
    if (lengths.empty()) throw Error(Errc::BadConfig, "chunk length sweep is empty");
    std::vector<double> ws = lengths;
    std::sort(ws.begin(), ws.end());
    ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
    SweepResult out;
    double best = 0;
    for (double w : ws) {
        out.per_length.push_back(run_group_experiment(group, w, cfg, hyper));
        const double e = std::abs(out.per_length.back().mean_error);
        if (out.per_length.size() == 1 || e < best) {
            best = e;
            out.optimal_s = w;
        }
    }
    return out;
}

double pca_cumulative_variance(const std::vector<FlowTrace>& group, const ExperimentConfig& cfg, int dims)
{
    const ChunkConfig ch = cfg.chunk(1.0);
    std::vector<Eigen::MatrixXd> parts;
    Eigen::Index rows = 0;
    for (auto& f : group) {
        parts.push_back(stft(f.samples, ch).frames);
        rows += parts.back().rows();
    }
    Eigen::MatrixXd all(rows, parts.front().cols());
    Eigen::Index r = 0;
    for (auto& p : parts) {
        all.middleRows(r, p.rows()) = p;
        r += p.rows();
    }
    const Standardizer st = fit_standardizer(all);
    const Eigen::VectorXd sv = singular_values(st.apply(all));
    const double total = sv.squaredNorm();
    if (!(total > 0)) return 1.0;
    const Eigen::Index k = std::min<Eigen::Index>(dims, sv.size());
    return sv.head(k).squaredNorm() / total;
}

GroupReport make_group_report(int group_id, const std::vector<FlowTrace>& group, const ExperimentConfig& cfg,
                              const HyperSource& hyper, SweepResult* sweep_out)
{
    if (group.size() < 2) throw Error(Errc::InsufficientGroup, "group needs at least 2 flows");
    SweepResult sw = chunk_length_sweep(group, cfg, cfg.chunk_lengths_s, hyper);
    GroupReport g;
    g.group_id = group_id;
    g.flow_count = static_cast<int>(group.size());
    g.pca_cum_variance_at_80 = pca_cumulative_variance(group, cfg, 80);
    const GroupExperiment& opt = sw.optimal();
    g.optimal_chunk_len_s = sw.optimal_s;
    g.pred_error_optimal = opt.mean_error;
    g.constant_error = opt.mean_constant;
    g.ar_error_optimal = opt.mean_ar;
    g.excluded = opt.excluded;
    if (const GroupExperiment* one = sw.at(1.0))
        g.pred_error_chunk_1s = one->mean_error;
    else
        g.pred_error_chunk_1s = run_group_experiment(group, 1.0, cfg, hyper).mean_error;
    g.quality = quality_label(g.pred_error_optimal, g.constant_error);
    if (sweep_out) *sweep_out = std::move(sw);
    return g;
}

double mean_optimal_chunk_length(const std::vector<GroupReport>& reports)
{
    if (reports.empty()) return 0.0;
    double s = 0;
    for (auto& r : reports) s += r.optimal_chunk_len_s;
    return s / static_cast<double>(reports.size());
}

std::string format_report(const std::vector<GroupReport>& reports, const ReportMeta& meta)
{
    std::string out;
    out += fmt::format("# seed,{}\n", meta.seed);
    out += fmt::format("# config_hash,{}\n", meta.config_hash);
    out += "# aggregate,mean over leave-one-out splits (signed)\n";
    int good = 0;
    for (auto& r : reports) good += r.quality == Quality::good;
    out += fmt::format("# good_groups,{}/{}\n", good, reports.size());
    out += fmt::format("# mean_optimal_chunk_len_s,{}\n", fmt_num(mean_optimal_chunk_length(reports)));
    for (auto& r : reports)
        if (r.excluded) out += fmt::format("# excluded_splits,{},{}\n", r.group_id, r.excluded);
    out += "group_id,flow_count,pca_cum_variance_at_80,constant_error,optimal_chunk_len_s,pred_error_chunk_1s,"
           "pred_error_optimal,quality\n";
    for (auto& r : reports)
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.group_id, r.flow_count, fmt_num(r.pca_cum_variance_at_80),
                           fmt_num(r.constant_error), fmt_num(r.optimal_chunk_len_s), fmt_num(r.pred_error_chunk_1s),
                           fmt_num(r.pred_error_optimal), quality_name(r.quality));
    return out;
}

std::string format_baselines(const std::vector<GroupReport>& reports)
{
    std::string out = "group_id,chunk_len_s,fkkf_error,constant_error,ar_error\n";
    for (auto& r : reports)
        out += fmt::format("{},{},{},{},{}\n", r.group_id, fmt_num(r.optimal_chunk_len_s), fmt_num(r.pred_error_optimal),
                           fmt_num(r.constant_error), fmt_num(r.ar_error_optimal));
    return out;
}

std::string format_split_trace(const SplitResult& s, double T_S)
{
    std::string out = "t,actual,predicted,ar\n";
    for (std::size_t i = 0; i < s.actual.size(); ++i)
        out += fmt::format("{},{},{},{}\n", fmt_num(static_cast<double>(s.obs_end + static_cast<long>(i)) * T_S),
                           fmt_num(s.actual[i]), fmt_num(i < s.predicted.size() ? s.predicted[i] : 0.0),
                           fmt_num(i < s.ar_predicted.size() ? s.ar_predicted[i] : 0.0));
    return out;
}

} // namespace fgk
