#include "fgk/fkkf.hpp"

#include "fgk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace fgk {

namespace {

constexpr double rcond_floor = 1e-14;

void symmetrize(Eigen::MatrixXd& P)
{
    P = 0.5 * (P + P.transpose()).eval();
}

void check_psd(const Eigen::MatrixXd& P, const std::string& what)
{
    if (!P.allFinite()) throw Error(Errc::NumericalFailure, what + " is not finite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double hi = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-8 * hi)
        throw Error(Errc::NumericalFailure, what + " lost positive semi-definiteness (min eigenvalue " +
                                                std::to_string(ev.minCoeff()) + ")");
}

// A^-1 B for square A, escalating diagonal jitter when A is near singular
Eigen::MatrixXd solve_with_jitter(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const std::string& what)
{
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rcond() > rcond_floor) {
        Eigen::MatrixXd x = lu.solve(B);
        if (x.allFinite()) return x;
    }
    const Eigen::Index n = A.rows();
    for (double eps = 1e-10; eps <= 1e-6 * 1.0001; eps *= 10.0) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lj(A + eps * Eigen::MatrixXd::Identity(n, n));
        if (lj.rcond() > rcond_floor) {
            Eigen::MatrixXd x = lj.solve(B);
            if (x.allFinite()) return x;
        }
    }
    throw Error(Errc::NumericalFailure, what + " is singular despite jitter");
}

// symmetric positive definite variant
Eigen::MatrixXd spd_solve_with_jitter(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const std::string& what)
{
    const Eigen::Index n = A.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) return llt.solve(B);
    for (double eps = 1e-10; eps <= 1e-6 * 1.0001; eps *= 10.0) {
        Eigen::LLT<Eigen::MatrixXd> lj(A + eps * Eigen::MatrixXd::Identity(n, n));
        if (lj.info() == Eigen::Success) return lj.solve(B);
    }
    throw Error(Errc::NumericalFailure, what + " is not positive definite despite jitter");
}

Eigen::MatrixXd centered_cov(const Eigen::MatrixXd& R)
{
    const double m = static_cast<double>(R.rows());
    Eigen::MatrixXd Rc = R.rowwise() - R.colwise().mean();
    Eigen::MatrixXd C = Rc.transpose() * Rc / m;
    symmetrize(C);
    return C;
}

struct Operators {
    Eigen::MatrixXd A_T;
    Eigen::MatrixXd A_O;
};

Operators regularized_operators(const Eigen::MatrixXd& Kbar, const std::vector<int>& S, const FkkfHyperparams& hp,
                                Regularizer reg)
{
    const Eigen::Index m = Kbar.rows();
    const Eigen::Index n = Kbar.cols();
    Operators ops;
    if (reg == Regularizer::subset_of_regressors) {
        // Kbar = Q R, Kbar (Kbar^T Kbar + lambda K_GG)^-1 = Q (R^T + lambda Q_S)^-1
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Kbar);
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
        Eigen::MatrixXd Rt = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
        Eigen::MatrixXd QS(n, n);
        for (Eigen::Index i = 0; i < n; ++i) QS.row(i) = Q.row(S[static_cast<std::size_t>(i)]);
        auto op = [&](double lambda, const char* name) {
            Eigen::MatrixXd M = Rt + lambda * QS;
            // A = Q M^-1  <=>  M^T A^T = Q^T
            Eigen::MatrixXd At = solve_with_jitter(M.transpose(), Q.transpose(), name);
            return Eigen::MatrixXd(At.transpose());
        };
        ops.A_T = op(hp.lambda_T, "transition operator (lambda_T)");
        ops.A_O = op(hp.lambda_O, "observation operator (lambda_O)");
    } else {
        Eigen::MatrixXd H = Kbar.transpose() * Kbar;
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        auto op = [&](double lambda, const char* name) {
            Eigen::MatrixXd Linv = spd_solve_with_jitter(H + lambda * I, Kbar.transpose(), name);
            return Eigen::MatrixXd(Linv.transpose());
        };
        ops.A_T = op(hp.lambda_T, "transition operator (lambda_T)");
        ops.A_O = op(hp.lambda_O, "observation operator (lambda_O)");
    }
    return ops;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<int>& idx)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
    return out;
}

} // namespace

void FkkfHyperparams::validate() const
{
    for (double v : {lambda_T, lambda_O, state_bw_scale, obs_bw_scale, kappa})
        if (!(v > 0) || !std::isfinite(v)) throw Error(Errc::BadConfig, "hyperparameters must be strictly positive");
}

void FkkfModel::refresh_products()
{
    GO = G * O;
    OGO = O.transpose() * GO;
    symmetrize(OGO);
    XO = X.transpose() * O;
}

void FkkfModel::check_consistent() const
{
    const Eigen::Index mm = X.rows();
    const Eigen::Index nn = T.rows();
    bool ok = Y.rows() == mm && T.cols() == nn && O.rows() == mm && O.cols() == nn && V.rows() == nn && V.cols() == nn &&
              n1.size() == nn && P1.rows() == nn && P1.cols() == nn && G.rows() == mm && G.cols() == mm &&
              GO.rows() == mm && GO.cols() == nn && OGO.rows() == nn && XO.rows() == X.cols() && XO.cols() == nn &&
              static_cast<Eigen::Index>(subspace_indices.size()) == nn && nn <= mm;
    if (!ok) throw Error(Errc::BadDimension, "model matrices are inconsistent");
}

std::vector<int> select_subspace(const Eigen::MatrixXd& X, const KernelSpec& state_kernel, const LearnOptions& opt)
{
    const int m = static_cast<int>(X.rows());
    const int n = opt.subspace_size;
    if (n < 1) throw Error(Errc::BadConfig, "sub-space size must be at least 1");
    if (n > m) throw Error(Errc::SubspaceTooLarge, "sub-space size " + std::to_string(n) + " exceeds " + std::to_string(m) + " training pairs");
    std::vector<int> S;
    if (n == m) {
        S.resize(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) S[static_cast<std::size_t>(i)] = i;
        return S;
    }
    if (opt.selection == SubspaceSelection::pivoted_cholesky)
        return pivoted_cholesky_select(X, state_kernel, n, opt.selection_tol);
    // stride over distinct states; repeated states would make the operator singular
    std::vector<int> uniq;
    std::map<std::vector<double>, int> seen;
    for (int i = 0; i < m; ++i) {
        std::vector<double> key(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index k = 0; k < X.cols(); ++k) key[static_cast<std::size_t>(k)] = X(i, k);
        if (seen.emplace(std::move(key), i).second) uniq.push_back(i);
    }
    const int u = static_cast<int>(uniq.size());
    const int step = (u + std::min(n, u) - 1) / std::min(n, u);
    for (int i = 0; i < u; i += step) S.push_back(uniq[static_cast<std::size_t>(i)]);
    return S;
}

FkkfModel learn(const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_next, const Eigen::MatrixXd& Y,
                const FkkfHyperparams& hp, const LearnOptions& opt)
{
    hp.validate();
    if (X.rows() < 2 || X_next.rows() != X.rows() || Y.rows() != X.rows() || X_next.cols() != X.cols())
        throw Error(Errc::BadDimension, "training states, successors and observations must align");
    if (opt.subspace_size > X.rows())
        throw Error(Errc::SubspaceTooLarge, "sub-space size " + std::to_string(opt.subspace_size) + " exceeds " +
                                                std::to_string(X.rows()) + " training pairs");
    FkkfModel M;
    M.hyper = hp;
    M.options = opt;
    M.X = X;
    M.Y = Y;
    const double bx = opt.state_bandwidth > 0 ? opt.state_bandwidth : median_heuristic(X, opt.bandwidth_subset, opt.seed);
    const double by = opt.obs_bandwidth > 0 ? opt.obs_bandwidth : median_heuristic(Y, opt.bandwidth_subset, opt.seed + 1);
    M.state_kernel = KernelSpec{KernelFamily::gaussian, bx, hp.state_bw_scale};
    M.obs_kernel = KernelSpec{KernelFamily::gaussian, by, hp.obs_bw_scale};

    M.subspace_indices = select_subspace(X, M.state_kernel, opt);
    const Eigen::MatrixXd Gamma = rows_of(X, M.subspace_indices);
    M.Kbar = gram(X, Gamma, M.state_kernel);
    M.Kbar_prime = gram(X_next, Gamma, M.state_kernel);
    M.G = gram(Y, Y, M.obs_kernel);

    Operators ops = regularized_operators(M.Kbar, M.subspace_indices, hp, opt.regularizer);
    M.T = M.Kbar_prime.transpose() * ops.A_T;
    M.O = std::move(ops.A_O);

    const Eigen::Index n = M.T.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd resid = M.Kbar_prime - M.Kbar * M.T.transpose();
    M.V = centered_cov(resid) + opt.jitter * I;
    M.n1 = M.Kbar_prime.colwise().mean().transpose();
    M.P1 = centered_cov(M.Kbar_prime) + opt.jitter * I;
    M.refresh_products();
    if (!M.T.allFinite() || !M.O.allFinite()) throw Error(Errc::NumericalFailure, "learned operators are not finite");
    return M;
}

FilterState initial_state(const FkkfModel& model)
{
    FilterState s;
    s.n = model.n1;
    s.P = model.P1;
    s.is_posterior = false;
    s.step = 0;
    s.scheduled = true;
    return s;
}

ProjectedGains project(const FkkfModel& model, int steps, int forecast_steps)
{
    if (steps < 1) throw Error(Errc::BadConfig, "projection needs at least one step");
    const Eigen::Index n = model.n();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd Ot = model.O.transpose();
    ProjectedGains g;
    Eigen::MatrixXd P = model.P1;
    for (int t = 0; t < steps; ++t) {
        g.P_prior_seq.push_back(P);
        // push-through form of P O^T (G O P O^T + kappa I)^-1
        Eigen::MatrixXd W = solve_with_jitter(model.hyper.kappa * I + P * model.OGO, P, "gain system");
        g.Q_seq.push_back(W * Ot);
        Eigen::MatrixXd Ppost = P - W * (model.OGO * P);
        symmetrize(Ppost);
        check_psd(Ppost, "posterior covariance at step " + std::to_string(t));
        g.P_post_seq.push_back(Ppost);
        if (t + 1 < steps || forecast_steps > 0) {
            P = model.T * Ppost * model.T.transpose() + model.V;
            symmetrize(P);
            check_psd(P, "prior covariance at step " + std::to_string(t + 1));
        }
    }
    for (int j = 0; j < forecast_steps; ++j) {
        g.P_prior_seq.push_back(P);
        if (j + 1 < forecast_steps) {
            P = model.T * P * model.T.transpose() + model.V;
            symmetrize(P);
        }
    }
    return g;
}

FilterState innovation_update(const FilterState& prior, const Eigen::VectorXd& y, const ProjectedGains& gains,
                              const FkkfModel& model)
{
    if (prior.is_posterior) throw Error(Errc::BadConfig, "innovation needs an a-priori state");
    if (prior.n.size() != model.n()) throw Error(Errc::BadDimension, "state does not match the model");
    const Eigen::VectorXd k = kernel_vector(model.Y, y, model.obs_kernel);
    const Eigen::VectorXd r = k - model.GO * prior.n;
    FilterState post;
    post.step = prior.step;
    post.is_posterior = true;
    const int t = prior.step;
    if (prior.scheduled && t < gains.steps()) {
        post.n = prior.n + gains.Q_seq[static_cast<std::size_t>(t)] * r;
        if (prior.P.size()) post.P = gains.P_post_seq[static_cast<std::size_t>(t)];
        post.scheduled = true;
        return post;
    }
    if (prior.P.size() == 0) throw Error(Errc::BadDimension, "covariance required beyond the projected steps");
    const Eigen::Index n = model.n();
    Eigen::MatrixXd W = solve_with_jitter(model.hyper.kappa * Eigen::MatrixXd::Identity(n, n) + prior.P * model.OGO,
                                          prior.P, "gain system");
    post.n = prior.n + W * (model.O.transpose() * r);
    post.P = prior.P - W * (model.OGO * prior.P);
    symmetrize(post.P);
    post.scheduled = false;
    return post;
}

FilterState prediction_update(const FilterState& s, const FkkfModel& model, const ProjectedGains* gains)
{
    if (s.n.size() != model.n()) throw Error(Errc::BadDimension, "state does not match the model");
    FilterState out;
    out.n = model.T * s.n;
    out.step = s.step + 1;
    out.is_posterior = false;
    out.scheduled = s.scheduled;
    if (s.P.size() == 0) return out;
    const bool on_timeline = gains && s.scheduled &&
                             static_cast<std::size_t>(out.step) < gains->P_prior_seq.size() &&
                             (s.is_posterior ? s.step < gains->steps() : s.step >= gains->steps());
    if (on_timeline) {
        out.P = gains->P_prior_seq[static_cast<std::size_t>(out.step)];
        return out;
    }
    out.P = model.T * s.P * model.T.transpose() + model.V;
    symmetrize(out.P);
    out.scheduled = false;
    return out;
}

std::vector<FilterState> predict_p_steps(const FilterState& state, int p, const FkkfModel& model,
                                         const ProjectedGains* gains)
{
    if (p < 1) throw Error(Errc::BadConfig, "p must be at least 1");
    std::vector<FilterState> out;
    out.reserve(static_cast<std::size_t>(p));
    FilterState cur = state;
    for (int i = 0; i < p; ++i) {
        cur = prediction_update(cur, model, gains);
        out.push_back(cur);
    }
    return out;
}

Eigen::VectorXd reconstruct_mean(const FilterState& state, const FkkfModel& model)
{
    if (state.n.size() != model.n()) throw Error(Errc::BadDimension, "state does not match the model");
    return model.XO * state.n;
}

Reconstruction reconstruct(const FilterState& state, const FkkfModel& model)
{
    Reconstruction r;
    r.mu = reconstruct_mean(state, model);
    if (state.P.size()) {
        r.sigma = model.XO * state.P * model.XO.transpose();
        symmetrize(r.sigma);
    }
    return r;
}

Eigen::VectorXd reconstruct_var_diag(const FilterState& state, const FkkfModel& model, int rows)
{
    if (state.P.size() == 0) return Eigen::VectorXd();
    const auto B = model.XO.topRows(rows);
    return (B * state.P).cwiseProduct(B).rowwise().sum();
}

FilterRun run_filter(const FkkfModel& model, const Eigen::MatrixXd& observed, int horizon_steps,
                     const ProjectedGains* gains, bool covariance)
{
    if (observed.rows() < 1) throw Error(Errc::InsufficientData, "no observed frames");
    if (observed.cols() != model.obs_dim()) throw Error(Errc::BadDimension, "observation width does not match the model");
    if (horizon_steps < 0) throw Error(Errc::BadConfig, "negative horizon");
    const int k = static_cast<int>(observed.rows());
    ProjectedGains local;
    if (!gains || gains->steps() < k || (covariance && static_cast<int>(gains->P_prior_seq.size()) < k + horizon_steps)) {
        local = project(model, k, covariance ? horizon_steps : 0);
        gains = &local;
    }
    FilterRun run;
    FilterState s = initial_state(model);
    if (!covariance) s.P.resize(0, 0);
    for (int i = 0; i < k; ++i) {
        FilterState post = innovation_update(s, observed.row(i).transpose(), *gains, model);
        s = prediction_update(post, model, gains);
        run.posteriors.push_back(std::move(post));
    }
    const int d = model.state_dim();
    run.mean.resize(horizon_steps, d);
    if (covariance) run.var_diag.resize(horizon_steps, d);
    for (int j = 0; j < horizon_steps; ++j) {
        if (j > 0) s = prediction_update(s, model, gains);
        run.mean.row(j) = reconstruct_mean(s, model).transpose();
        if (covariance) run.var_diag.row(j) = reconstruct_var_diag(s, model, d).transpose();
        run.forecasts.push_back(s);
    }
    return run;
}

} // namespace fgk
