#pragma once

#include <Eigen/Dense>

namespace fgk {

struct Standardizer {
    static constexpr double eps = 1e-12;
    Eigen::VectorXd means;
    Eigen::VectorXd stds;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& rows) const;
    double scale(Eigen::Index i) const { return stds[i] < eps ? 1.0 : stds[i]; }
};

struct PcaBasis {
    Eigen::MatrixXd components; // original_dim x kept_dim
    Eigen::VectorXd explained_variance_ratio;
    int original_dim = 0;
    int kept_dim = 0;

    double cumulative() const { return explained_variance_ratio.sum(); }
};

Standardizer fit_standardizer(const Eigen::MatrixXd& data);

// data must already be standardized
PcaBasis fit_pca(const Eigen::MatrixXd& standardized, int kept_dim);

// singular values of the standardized data, descending
Eigen::VectorXd singular_values(const Eigen::MatrixXd& standardized);

Eigen::MatrixXd project(const PcaBasis& basis, const Standardizer& st, const Eigen::MatrixXd& rows);
Eigen::MatrixXd inverse_project(const PcaBasis& basis, const Standardizer& st, const Eigen::MatrixXd& reduced);

// standardizer + basis, kept dimension clamped to what the data supports
struct Reducer {
    Standardizer standardizer;
    PcaBasis basis;

    Eigen::MatrixXd forward(const Eigen::MatrixXd& rows) const { return project(basis, standardizer, rows); }
    Eigen::MatrixXd backward(const Eigen::MatrixXd& reduced) const { return inverse_project(basis, standardizer, reduced); }
};

// kept = min(requested, rows - 1, cols, numerical rank)
Reducer fit_reducer(const Eigen::MatrixXd& data, int requested_dim);

} // namespace fgk
