#pragma once

#include "fgk/kernelcore.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <tuple>
#include <vector>

namespace fgk {

struct FkkfHyperparams {
    double lambda_T = 1e-3;
    double lambda_O = 1e-3;
    double state_bw_scale = 0.5;
    double obs_bw_scale = 0.5;
    double kappa = 1e-3;

    void validate() const;
    auto tuple() const { return std::make_tuple(lambda_T, lambda_O, state_bw_scale, obs_bw_scale, kappa); }
    bool operator==(const FkkfHyperparams&) const = default;
};

// subset_of_regressors: (Kbar^T Kbar + lambda K_GG)^-1, equals the full-space operator at n = m
// ridge: (Kbar^T Kbar + lambda I)^-1
enum class Regularizer { subset_of_regressors, ridge };

enum class SubspaceSelection { pivoted_cholesky, stride };

struct LearnOptions {
    int subspace_size = 600;
    Regularizer regularizer = Regularizer::subset_of_regressors;
    SubspaceSelection selection = SubspaceSelection::pivoted_cholesky;
    double selection_tol = 1e-6;
    double jitter = 1e-8; // added to V and P1
    int bandwidth_subset = 500;
    std::uint64_t seed = 0;
    // > 0 replaces the median heuristic base bandwidth
    double state_bandwidth = 0.0;
    double obs_bandwidth = 0.0;
};

struct FkkfModel {
    Eigen::MatrixXd X; // m x d training states, one per row
    Eigen::MatrixXd Y; // m x dy training observations
    std::vector<int> subspace_indices;
    Eigen::MatrixXd Kbar;       // m x n
    Eigen::MatrixXd Kbar_prime; // m x n, successors against the sub-space
    Eigen::MatrixXd G;          // m x m observation Gram
    Eigen::MatrixXd T;          // n x n
    Eigen::MatrixXd O;          // m x n
    Eigen::MatrixXd V;          // n x n
    Eigen::VectorXd n1;
    Eigen::MatrixXd P1;
    // cached products
    Eigen::MatrixXd GO;  // m x n
    Eigen::MatrixXd OGO; // n x n
    Eigen::MatrixXd XO;  // d x n

    KernelSpec state_kernel;
    KernelSpec obs_kernel;
    FkkfHyperparams hyper;
    LearnOptions options;

    int m() const { return static_cast<int>(X.rows()); }
    int n() const { return static_cast<int>(T.rows()); }
    int state_dim() const { return static_cast<int>(X.cols()); }
    int obs_dim() const { return static_cast<int>(Y.cols()); }

    void refresh_products();
    void check_consistent() const;
};

FkkfModel learn(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_next, const Eigen::MatrixXd& Y,
                const FkkfHyperparams& hp, const LearnOptions& opt);

std::vector<int> select_subspace(const Eigen::MatrixXd& X, const KernelSpec& state_kernel, const LearnOptions& opt);

struct FilterState {
    Eigen::VectorXd n;
    Eigen::MatrixXd P; // empty when covariance is not tracked
    bool is_posterior = false;
    int step = 0;
    bool scheduled = true; // covariance follows the projected timeline
};

struct ProjectedGains {
    std::vector<Eigen::MatrixXd> Q_seq;        // n x m per innovation step
    std::vector<Eigen::MatrixXd> P_post_seq;   // posterior per innovation step
    std::vector<Eigen::MatrixXd> P_prior_seq;  // steps + forecast_steps priors

    int steps() const { return static_cast<int>(Q_seq.size()); }
};

ProjectedGains project(const FkkfModel& model, int steps, int forecast_steps = 0);

FilterState initial_state(const FkkfModel& model);

FilterState innovation_update(const FilterState& prior, const Eigen::VectorXd& y, const ProjectedGains& gains,
                              const FkkfModel& model);

FilterState prediction_update(const FilterState& posterior, const FkkfModel& model,
                              const ProjectedGains* gains = nullptr);

std::vector<FilterState> predict_p_steps(const FilterState& state, int p, const FkkfModel& model,
                                         const ProjectedGains* gains = nullptr);

struct Reconstruction {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
};

Reconstruction reconstruct(const FilterState& state, const FkkfModel& model);
Eigen::VectorXd reconstruct_mean(const FilterState& state, const FkkfModel& model);
// diagonal of sigma for the first `rows` state coordinates
Eigen::VectorXd reconstruct_var_diag(const FilterState& state, const FkkfModel& model, int rows);

struct FilterRun {
    std::vector<FilterState> posteriors;
    std::vector<FilterState> forecasts;
    Eigen::MatrixXd mean;     // horizon x d
    Eigen::MatrixXd var_diag; // horizon x d, empty without covariance
};

// observed: one reduced observation per row
FilterRun run_filter(const FkkfModel& model, const Eigen::MatrixXd& observed, int horizon_steps,
                     const ProjectedGains* gains = nullptr, bool covariance = true);

} // namespace fgk
