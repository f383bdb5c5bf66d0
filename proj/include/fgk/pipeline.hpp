#pragma once

#include "fgk/fkkf.hpp"
#include "fgk/reduction.hpp"
#include "fgk/spectral.hpp"
#include "fgk/trace_io.hpp"

#include <Eigen/Dense>
#include <vector>

namespace fgk {

struct StateWindowConfig {
    std::vector<double> horizons_s{1.0, 2.0, 3.0};
    double observation_horizon_s = 1.0;

    void validate() const;
};

// horizons as multiples of the chunk length, observation = first horizon
StateWindowConfig scaled_windows(double chunk_length_s, const std::vector<double>& multiples);

// raw frames per horizon block, one row per retained index
std::vector<Eigen::MatrixXd> window_blocks(const std::vector<double>& samples, const StateWindowConfig& win,
                                           const ChunkConfig& chunk);

int window_count(std::size_t samples, const StateWindowConfig& win, const ChunkConfig& chunk);

struct StateWindows {
    Eigen::MatrixXd states;
    Eigen::MatrixXd observations;
};

// each block reduced by its own reducer, then concatenated
StateWindows build_state_windows(const std::vector<double>& samples, const StateWindowConfig& win,
                                 const ChunkConfig& chunk, const std::vector<Reducer>& reducers);

// reducers fitted on the stacked blocks of all flows
std::vector<Reducer> fit_window_reducers(const std::vector<std::vector<Eigen::MatrixXd>>& per_flow_blocks, int kept_dim);

struct Preprocessing {
    ChunkConfig chunk;
    StateWindowConfig windows;
    int kept_dim = 80;
    std::vector<Reducer> reducers;

    int obs_dim() const { return reducers.empty() ? 0 : reducers.front().basis.kept_dim; }
};

struct FlowModel {
    Preprocessing prep;
    FkkfModel core;
};

struct TrainingSet {
    Eigen::MatrixXd X;
    Eigen::MatrixXd X_next;
    Eigen::MatrixXd Y;
};

// consecutive pairs within each flow
TrainingSet training_pairs(const std::vector<FlowTrace>& flows, Preprocessing& prep);

FlowModel learn_flows(const std::vector<FlowTrace>& flows, const FkkfHyperparams& hp, const LearnOptions& opt,
                      const ChunkConfig& chunk, const StateWindowConfig& win, int kept_dim);

// reduced observation frames t in [first, first + count), tail zero-padded
Eigen::MatrixXd observation_frames(const Preprocessing& prep, const std::vector<double>& samples, int first, int count);

struct Prediction {
    Eigen::MatrixXd mean_frames;   // horizon x obs_dim, reduced observation block
    Eigen::MatrixXd cov_diag;      // horizon x obs_dim, empty without covariance
    std::vector<double> mean_kbit; // samples [first_sample, first_sample + horizon*stride)
    std::vector<double> var_kbit;  // same span, diagonal propagation, empty without covariance
    long first_sample = 0;         // first sample after the observed chunks
    int t_last = 0;                // last observed frame
    double horizon_s = 0.0;
};

// d chunk samples / d reduced observation, L x obs_dim
Eigen::MatrixXd observation_jacobian(const Preprocessing& prep);

Prediction predict_flow(const FlowModel& model, const std::vector<double>& samples, int first_frame, int observe_steps,
                        int horizon_steps, bool covariance = true, const ProjectedGains* gains = nullptr);

} // namespace fgk
