#pragma once

#include "fgk/fkkf.hpp"
#include "fgk/pipeline.hpp"
#include "fgk/trace_io.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fgk {

enum class Quality { good, moderate, bad };

std::string quality_name(Quality q);

double peak_prediction_error(const std::vector<double>& predicted, const std::vector<double>& actual);
double constant_error(const std::vector<double>& observed_prefix, const std::vector<double>& actual);

Quality quality_label(double pred_error, double const_error);

// least-squares AR(p) without intercept, iterated forecast clamped at 0
std::vector<double> ar_baseline(const std::vector<double>& observed, int horizon_steps, int order);

// first frame whose forward window sum exceeds factor x the median window sum
std::optional<int> locate_peak_start(const std::vector<double>& samples, const ChunkConfig& chunk, double factor,
                                     double window_s = 0.0);

struct ExperimentConfig {
    int observe_steps = 3;
    double predict_horizon_s = 1.0;
    std::vector<double> chunk_lengths_s{0.15, 0.5, 1.0};
    double sample_interval_s = 0.01;
    double chunk_interval_s = 0.05;
    std::vector<double> horizon_multiples{1.0, 2.0, 3.0};
    int kept_dim = 80;
    double peak_factor = 5.0;
    double peak_window_s = 0.0; // 0 = chunk length
    int ar_order = 5;
    LearnOptions learn;

    void validate() const;
    ChunkConfig chunk(double w) const;
    int horizon_steps() const;
    int horizon_samples() const;
};

struct SplitResult {
    int test_index = 0;
    bool excluded = false;
    std::string reason;
    int peak_start = -1;
    long obs_end = 0;
    double pred_error = 0;
    double const_error = 0;
    double ar_error = 0;
    std::vector<double> predicted;
    std::vector<double> actual;
    std::vector<double> ar_predicted;
};

SplitResult evaluate_split(const std::vector<FlowTrace>& train, const FlowTrace& test, double w,
                           const FkkfHyperparams& hp, const ExperimentConfig& cfg, int test_index = 0);

// hyperparameters for one split given its training flows and chunk length
using HyperSource = std::function<FkkfHyperparams(const std::vector<FlowTrace>& train, double w)>;

HyperSource fixed_hyper(const FkkfHyperparams& hp);

struct GroupExperiment {
    double chunk_length_s = 0;
    std::vector<SplitResult> splits;
    double mean_error = 0;
    double mean_constant = 0;
    double mean_ar = 0;
    int excluded = 0;
    int used() const { return static_cast<int>(splits.size()) - excluded; }
};

GroupExperiment run_group_experiment(const std::vector<FlowTrace>& group, double w, const ExperimentConfig& cfg,
                                     const HyperSource& hyper);

struct SweepResult {
    double optimal_s = 0;
    std::vector<GroupExperiment> per_length;
    const GroupExperiment& optimal() const;
    const GroupExperiment* at(double w) const;
};

SweepResult chunk_length_sweep(const std::vector<FlowTrace>& group, const ExperimentConfig& cfg,
                               const std::vector<double>& lengths, const HyperSource& hyper);

struct GroupReport {
    int group_id = 0;
    int flow_count = 0;
    double pca_cum_variance_at_80 = 0;
    double constant_error = 0;
    double optimal_chunk_len_s = 0;
    double pred_error_chunk_1s = 0;
    double pred_error_optimal = 0;
    Quality quality = Quality::bad;
    int excluded = 0;
    double ar_error_optimal = 0;
};

// cumulative explained variance of the first `dims` components of the w = 1 s observation frames
double pca_cumulative_variance(const std::vector<FlowTrace>& group, const ExperimentConfig& cfg, int dims = 80);

GroupReport make_group_report(int group_id, const std::vector<FlowTrace>& group, const ExperimentConfig& cfg,
                              const HyperSource& hyper, SweepResult* sweep_out = nullptr);

struct ReportMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
};

std::string format_report(const std::vector<GroupReport>& reports, const ReportMeta& meta);
std::string format_baselines(const std::vector<GroupReport>& reports);
std::string format_split_trace(const SplitResult& s, double T_S);

double mean_optimal_chunk_length(const std::vector<GroupReport>& reports);

} // namespace fgk
