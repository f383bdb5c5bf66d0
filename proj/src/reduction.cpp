#include "fgk/reduction.hpp"

#include "fgk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fgk {

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& rows) const
{
    if (rows.cols() != means.size()) throw Error(Errc::BadDimension, "standardizer width mismatch");
    Eigen::MatrixXd z(rows.rows(), rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) z.col(j) = (rows.col(j).array() - means[j]) / scale(j);
    return z;
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& rows) const
{
    if (rows.cols() != means.size()) throw Error(Errc::BadDimension, "standardizer width mismatch");
    Eigen::MatrixXd x(rows.rows(), rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) x.col(j) = rows.col(j).array() * scale(j) + means[j];
    return x;
}

Standardizer fit_standardizer(const Eigen::MatrixXd& data)
{
    if (data.rows() < 2) throw Error(Errc::InsufficientData, "standardizer needs at least 2 rows");
    Standardizer s;
    const double n = static_cast<double>(data.rows());
    s.means = data.colwise().sum().transpose() / n;
    s.stds.resize(data.cols());
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        double v = (data.col(j).array() - s.means[j]).square().sum() / n;
        s.stds[j] = std::sqrt(v);
    }
    return s;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& standardized)
{
    Eigen::BDCSVD<Eigen::MatrixXd> svd(standardized);
    return svd.singularValues();
}

PcaBasis fit_pca(const Eigen::MatrixXd& standardized, int kept_dim)
{
    const auto rows = standardized.rows();
    const auto cols = standardized.cols();
    if (kept_dim < 1 || kept_dim > std::min<Eigen::Index>(rows - 1, cols))
        throw Error(Errc::BadDimension, "kept_dim " + std::to_string(kept_dim) + " outside [1, " +
                                            std::to_string(std::min<Eigen::Index>(rows - 1, cols)) + "]");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(standardized, Eigen::ComputeThinV);
    const Eigen::VectorXd sv2 = svd.singularValues().array().square();
    const double total = sv2.sum();
    PcaBasis b;
    b.original_dim = static_cast<int>(cols);
    b.kept_dim = kept_dim;
    b.components = svd.matrixV().leftCols(kept_dim);
    b.explained_variance_ratio = total > 0 ? Eigen::VectorXd(sv2.head(kept_dim) / total) : Eigen::VectorXd::Zero(kept_dim);
    for (int k = 0; k < kept_dim; ++k) {
        Eigen::Index arg = 0;
        b.components.col(k).cwiseAbs().maxCoeff(&arg);
        if (b.components(arg, k) < 0) b.components.col(k) *= -1.0;
    }
    return b;
}

Eigen::MatrixXd project(const PcaBasis& basis, const Standardizer& st, const Eigen::MatrixXd& rows)
{
    if (rows.cols() != basis.original_dim) throw Error(Errc::BadDimension, "row width does not match basis");
    return st.apply(rows) * basis.components;
}

Eigen::MatrixXd inverse_project(const PcaBasis& basis, const Standardizer& st, const Eigen::MatrixXd& reduced)
{
    if (reduced.cols() != basis.kept_dim) throw Error(Errc::BadDimension, "reduced width does not match basis");
    return st.invert(reduced * basis.components.transpose());
}

Reducer fit_reducer(const Eigen::MatrixXd& data, int requested_dim)
{
    Reducer r;
    r.standardizer = fit_standardizer(data);
    Eigen::MatrixXd z = r.standardizer.apply(data);
    Eigen::VectorXd sv = singular_values(z);
    int rank = 0;
    const double top = sv.size() ? sv[0] : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-9 * top) ++rank;
    int kept = std::min<int>({requested_dim, static_cast<int>(data.rows()) - 1, static_cast<int>(data.cols()), rank});
    if (kept < 1) throw Error(Errc::InsufficientData, "data has no variance to reduce");
    r.basis = fit_pca(z, kept);
    return r;
}

} // namespace fgk
