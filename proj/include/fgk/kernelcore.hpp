#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace fgk {

enum class KernelFamily { gaussian };

struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double bandwidth = 1.0;
    double scale_factor = 1.0;

    double effective() const { return bandwidth * scale_factor; }
    void validate() const;
};

// rows are samples throughout
double median_heuristic(const Eigen::MatrixXd& samples, int subset_size, std::uint64_t seed);

Eigen::MatrixXd gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const KernelSpec& spec);
Eigen::MatrixXd gram_serial(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const KernelSpec& spec);

Eigen::VectorXd kernel_vector(const Eigen::MatrixXd& train, const Eigen::VectorXd& y, const KernelSpec& spec);

Eigen::MatrixXd sq_dists(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
Eigen::MatrixXd sq_dists_serial(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// greedy pivoted Cholesky on gram(X, X): up to n indices with residual above tol, ascending
std::vector<int> pivoted_cholesky_select(const Eigen::MatrixXd& X, const KernelSpec& spec, int n, double tol);

} // namespace fgk
