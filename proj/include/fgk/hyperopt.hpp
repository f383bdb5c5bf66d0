#pragma once

#include "fgk/evaluation.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fgk {

struct SearchSpace {
    std::vector<double> lambda_T{1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> lambda_O{1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> state_bw_scale{0.25, 0.5, 1, 2, 4};
    std::vector<double> obs_bw_scale{0.25, 0.5, 1, 2, 4};
    std::vector<double> kappa{1e-4, 1e-3, 1e-2, 1e-1};

    void validate() const;
    std::size_t size() const;
    // all points, lexicographically ascending
    std::vector<FkkfHyperparams> points() const;
};

enum class Validation { leave_one_out, holdout_fraction };

// error of one candidate given (fit flows, validation flow)
using ErrorFn = std::function<double(const std::vector<FlowTrace>& fit, const FlowTrace& val, const FkkfHyperparams& hp)>;

// |peak prediction error| of one split at chunk length w
ErrorFn peak_error_fn(const ExperimentConfig& cfg, double w);

struct CandidateResult {
    FkkfHyperparams hp;
    double error = 0;
    bool viable = false;
    std::string failure;
};

struct SearchResult {
    FkkfHyperparams best;
    double error = 0;
    std::vector<CandidateResult> candidates;
};

struct SearchOptions {
    Validation validation = Validation::leave_one_out;
    double holdout_fraction = 0.25;
};

SearchResult grid_search(const std::vector<FlowTrace>& train, const SearchSpace& space, const ErrorFn& error_fn,
                         const SearchOptions& opt = {});

std::string format_audit_log(const SearchResult& r);

// grid search per split on its training flows
HyperSource searched_hyper(const SearchSpace& space, const ExperimentConfig& cfg, const SearchOptions& opt = {});

} // namespace fgk
