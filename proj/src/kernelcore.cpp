#include "fgk/kernelcore.hpp"

#include "fgk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fgk {

namespace {

void check_width(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B)
{
    if (A.cols() != B.cols())
        throw Error(Errc::BadDimension,
                    "sample widths differ: " + std::to_string(A.cols()) + " vs " + std::to_string(B.cols()));
}

// column-major copy with samples as columns, contiguous per sample
Eigen::MatrixXd samples_as_columns(const Eigen::MatrixXd& A)
{
    return A.transpose();
}

inline double sqdist(const double* a, const double* b, Eigen::Index d)
{
    double s = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
        double t = a[k] - b[k];
        s += t * t;
    }
    return s;
}

} // namespace

void KernelSpec::validate() const
{
    if (!(bandwidth > 0) || !(scale_factor > 0) || !std::isfinite(bandwidth * scale_factor))
        throw Error(Errc::BadConfig, "kernel bandwidth and scale must be positive");
}

Eigen::MatrixXd sq_dists(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B)
{
    check_width(A, B);
    const Eigen::MatrixXd At = samples_as_columns(A);
    const Eigen::MatrixXd Bt = samples_as_columns(B);
    const Eigen::Index d = A.cols();
    const Eigen::Index na = A.rows();
    const Eigen::Index nb = B.rows();
    Eigen::MatrixXd D(na, nb);
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < nb; ++j)
        for (Eigen::Index i = 0; i < na; ++i) D(i, j) = sqdist(At.col(i).data(), Bt.col(j).data(), d);
    return D;
}

Eigen::MatrixXd sq_dists_serial(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B)
{
    check_width(A, B);
    Eigen::MatrixXd D(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j) D(i, j) = (A.row(i) - B.row(j)).squaredNorm();
    return D;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const KernelSpec& spec)
{
    spec.validate();
    check_width(A, B);
    const double bw = spec.effective();
    const double c = 1.0 / (2.0 * bw * bw);
    const Eigen::MatrixXd At = samples_as_columns(A);
    const Eigen::MatrixXd Bt = samples_as_columns(B);
    const Eigen::Index d = A.cols();
    const Eigen::Index na = A.rows();
    const Eigen::Index nb = B.rows();
    Eigen::MatrixXd K(na, nb);
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < nb; ++j)
        for (Eigen::Index i = 0; i < na; ++i) K(i, j) = std::exp(-c * sqdist(At.col(i).data(), Bt.col(j).data(), d));
    return K;
}

Eigen::MatrixXd gram_serial(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const KernelSpec& spec)
{
    spec.validate();
    check_width(A, B);
    const double bw = spec.effective();
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j)
            K(i, j) = std::exp(-(A.row(i) - B.row(j)).squaredNorm() / (2.0 * bw * bw));
    return K;
}

Eigen::VectorXd kernel_vector(const Eigen::MatrixXd& train, const Eigen::VectorXd& y, const KernelSpec& spec)
{
    spec.validate();
    if (y.size() != train.cols()) throw Error(Errc::BadDimension, "observation width does not match training data");
    const double bw = spec.effective();
    const double c = 1.0 / (2.0 * bw * bw);
    Eigen::VectorXd k(train.rows());
    for (Eigen::Index i = 0; i < train.rows(); ++i) k[i] = std::exp(-c * (train.row(i).transpose() - y).squaredNorm());
    return k;
}

double median_heuristic(const Eigen::MatrixXd& samples, int subset_size, std::uint64_t seed)
{
    if (samples.rows() < 2) throw Error(Errc::InsufficientData, "median heuristic needs at least 2 samples");
    if (subset_size < 2) throw Error(Errc::BadConfig, "median heuristic subset must hold at least 2 samples");
    std::vector<Eigen::Index> all(static_cast<std::size_t>(samples.rows()));
    std::iota(all.begin(), all.end(), Eigen::Index(0));
    std::vector<Eigen::Index> pick;
    if (subset_size >= samples.rows()) {
        pick = all;
    } else {
        std::mt19937_64 rng(seed);
        std::sample(all.begin(), all.end(), std::back_inserter(pick), subset_size, rng);
    }
    Eigen::MatrixXd S(static_cast<Eigen::Index>(pick.size()), samples.cols());
    for (std::size_t i = 0; i < pick.size(); ++i) S.row(static_cast<Eigen::Index>(i)) = samples.row(pick[i]);
    Eigen::MatrixXd D = sq_dists(S, S);
    std::vector<double> d;
    d.reserve(pick.size() * (pick.size() - 1) / 2);
    for (Eigen::Index j = 1; j < D.cols(); ++j)
        for (Eigen::Index i = 0; i < j; ++i)
            if (D(i, j) > 0) d.push_back(D(i, j));
    if (d.empty()) throw Error(Errc::ZeroBandwidth, "all sampled points coincide");
    std::sort(d.begin(), d.end());
    const std::size_t h = d.size() / 2;
    double med = d.size() % 2 ? d[h] : 0.5 * (d[h - 1] + d[h]);
    return std::sqrt(med);
}

std::vector<int> pivoted_cholesky_select(const Eigen::MatrixXd& X, const KernelSpec& spec, int n, double tol)
{
    spec.validate();
    const Eigen::Index m = X.rows();
    n = static_cast<int>(std::min<Eigen::Index>(n, m));
    Eigen::VectorXd resid = Eigen::VectorXd::Ones(m);
    Eigen::MatrixXd L(m, n);
    std::vector<int> chosen;
    std::vector<char> taken(static_cast<std::size_t>(m), 0);
    for (int j = 0; j < n; ++j) {
        Eigen::Index piv = -1;
        double best = tol;
        for (Eigen::Index i = 0; i < m; ++i)
            if (!taken[i] && resid[i] > best) {
                best = resid[i];
                piv = i;
            }
        if (piv < 0) break;
        Eigen::VectorXd k = gram(X, X.row(piv), spec).col(0);
        Eigen::VectorXd l = k - L.leftCols(j) * L.row(piv).head(j).transpose();
        l /= std::sqrt(resid[piv]);
        L.col(j) = l;
        resid -= l.cwiseAbs2();
        taken[piv] = 1;
        chosen.push_back(static_cast<int>(piv));
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

} // namespace fgk
