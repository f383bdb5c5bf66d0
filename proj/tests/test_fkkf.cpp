#include "fgk/fkkf.hpp"
#include "fgk/pipeline.hpp"
#include "scenarios.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace fgk;
using namespace fgk::testing;

namespace {

FkkfModel small_model(std::uint64_t seed = 1, int m = 120, int n = 40, double kappa = 1e-2)
{
    const auto d = equivalence_data(m, seed);
    LearnOptions opt;
    opt.subspace_size = n;
    opt.seed = seed;
    return learn(d.X, d.Xn, d.Y, {1e-2, 1e-2, 1.0, 1.0, kappa}, opt);
}

// circular motion, period 20 steps
void circle(int m, Eigen::MatrixXd& X, Eigen::MatrixXd& Xn)
{
    X.resize(m, 2);
    Xn.resize(m, 2);
    for (int t = 0; t < m; ++t) {
        const double a = 2 * M_PI * t / 20.0, b = 2 * M_PI * (t + 1) / 20.0;
        X.row(t) << std::cos(a), std::sin(a);
        Xn.row(t) << std::cos(b), std::sin(b);
    }
}

} // namespace

TEST_CASE("sub-space filter with n = m equals the full-space recursion")
{
    auto r = subspace_equivalence(120, 3);
    CHECK(r.steps == 30);
    CHECK(r.max_err <= 1e-8);
    CHECK(r.max_ref > 1e-3);
}

TEST_CASE("learn shapes and errors")
{
    auto M = small_model();
    CHECK(M.m() == 120);
    CHECK(M.n() == 40);
    CHECK_NOTHROW(M.check_consistent());
    CHECK(max_abs(M.P1 - M.P1.transpose()) == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.P1);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    const auto d = equivalence_data(50, 1);
    LearnOptions big;
    big.subspace_size = 51;
    CHECK(error_code_of([&] { learn(d.X, d.Xn, d.Y, {}, big); }) == Errc::SubspaceTooLarge);
    CHECK(error_code_of([&] { learn(d.X, d.Xn.topRows(40), d.Y, {}, {}); }) == Errc::BadDimension);
    CHECK(error_code_of([&] { learn(d.X, d.Xn, d.Y, {0.0, 1, 1, 1, 1}, {}); }) == Errc::BadConfig);
}

TEST_CASE("stride selection skips repeated states")
{
    Eigen::MatrixXd X(6, 1);
    X << 0, 0, 1, 1, 2, 3;
    LearnOptions o;
    o.selection = SubspaceSelection::stride;
    o.subspace_size = 2;
    auto S = select_subspace(X, {KernelFamily::gaussian, 1.0, 1.0}, o);
    CHECK(S == std::vector<int>{0, 4});
}

TEST_CASE("huge kappa switches the observations off")
{
    auto M = small_model(2, 120, 40, 1e12);
    auto g = project(M, 5);
    for (auto& Q : g.Q_seq) CHECK(Q.norm() < 1e-6);
    FilterState s = initial_state(M);
    auto post = innovation_update(s, M.Y.row(10).transpose(), g, M);
    CHECK(max_abs(reconstruct_mean(post, M) - reconstruct_mean(s, M)) < 1e-6);
}

TEST_CASE("projection prefix and observation independence")
{
    auto M = small_model(3);
    auto g1 = project(M, 1), g5 = project(M, 5, 3);
    CHECK(g1.Q_seq[0] == g5.Q_seq[0]);
    CHECK(g1.P_post_seq[0] == g5.P_post_seq[0]);
    CHECK(g5.P_prior_seq.size() == 8);
    const auto before = project(M, 5, 3);
    Eigen::MatrixXd obs = M.Y.middleRows(7, 5);
    run_filter(M, obs, 3, &before);
    const auto after = project(M, 5, 3);
    for (int t = 0; t < 5; ++t) CHECK(before.Q_seq[static_cast<std::size_t>(t)] == after.Q_seq[static_cast<std::size_t>(t)]);
}

TEST_CASE("gain sequence settles")
{
    auto M = small_model(4);
    auto g = project(M, 60);
    auto diff = [&](int t) { return (g.Q_seq[static_cast<std::size_t>(t)] - g.Q_seq[static_cast<std::size_t>(t - 1)]).norm(); };
    CHECK(diff(59) <= diff(30));
    CHECK(diff(30) <= diff(10));
    // long-run fixed point
    auto far = project(M, 400);
    CHECK((far.Q_seq[399] - far.Q_seq[398]).norm() <= 1e-6 * far.Q_seq[399].norm() + 1e-12);
}

TEST_CASE("scheduled and unscheduled updates agree")
{
    auto M = small_model(5);
    auto g = project(M, 4);
    ProjectedGains none = project(M, 1);
    FilterState a = initial_state(M), b = initial_state(M);
    for (int t = 0; t < 4; ++t) {
        const Eigen::VectorXd y = M.Y.row(20 + t).transpose();
        auto pa = innovation_update(a, y, g, M);
        auto pb = innovation_update(b, y, none, M);
        CHECK(max_abs(pa.n - pb.n) < 1e-9 * std::max(1.0, max_abs(pa.n)));
        CHECK(max_abs(pa.P - pb.P) < 1e-9 * std::max(1.0, max_abs(pa.P)));
        a = prediction_update(pa, M, &g);
        b = prediction_update(pb, M, &none);
    }
}

TEST_CASE("prediction update")
{
    auto M = small_model(6);
    FilterState z = initial_state(M);
    z.n.setZero();
    z.is_posterior = true;
    CHECK(prediction_update(z, M).n.isZero(0));
    CHECK(reconstruct_mean(z, M).isZero(0));

    FkkfModel H = M;
    H.T = Eigen::MatrixXd::Identity(M.n(), M.n());
    H.V.setZero();
    FilterState s = initial_state(H);
    s.is_posterior = true;
    auto p = prediction_update(s, H);
    CHECK(p.n == s.n);
    CHECK(p.P == s.P);

    // identity dynamics with PSD noise: trace grows by tr(V) per step
    H.V = M.V;
    auto steps = predict_p_steps(s, 10, H);
    double prev = s.P.trace();
    for (auto& st : steps) {
        CHECK(st.P.trace() >= prev);
        prev = st.P.trace();
    }

    auto seq = predict_p_steps(s, 20, M);
    CHECK(seq.size() == 20);
    FilterState cur = s;
    for (auto& st : seq) {
        cur = prediction_update(cur, M);
        CHECK(cur.n == st.n);
        CHECK(cur.P == st.P);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.P, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
    }
    CHECK(predict_p_steps(s, 1, M)[0].n == prediction_update(s, M).n);
}

TEST_CASE("reconstruction is linear and its covariance PSD")
{
    auto M = small_model(7);
    FilterState a = initial_state(M), b = initial_state(M);
    b.n = Eigen::VectorXd::LinSpaced(M.n(), -1, 1);
    FilterState c = a;
    c.n = 2.0 * a.n - 3.0 * b.n;
    CHECK(max_abs(reconstruct_mean(c, M) - (2.0 * reconstruct_mean(a, M) - 3.0 * reconstruct_mean(b, M))) < 1e-10);

    auto run = run_filter(M, M.Y.middleRows(30, 6), 5);
    for (auto& s : run.posteriors) {
        auto r = reconstruct(s, M);
        CHECK(max_abs(r.sigma - r.sigma.transpose()) == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.sigma, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
        CHECK(max_abs(reconstruct_var_diag(s, M, M.state_dim()) - r.sigma.diagonal()) < 1e-10);
    }
    CHECK(run.mean.rows() == 5);
    CHECK((run.var_diag.array() >= -1e-8).all());
    auto none = run_filter(M, M.Y.middleRows(30, 6), 0);
    CHECK(none.mean.rows() == 0);
    CHECK(none.posteriors.size() == 6);
    auto mean_only = run_filter(M, M.Y.middleRows(30, 6), 5, nullptr, false);
    CHECK(max_abs(mean_only.mean - run.mean) == 0.0);
}

TEST_CASE("training state embedding reconstructs the state")
{
    Eigen::MatrixXd X, Xn;
    circle(200, X, Xn);
    X += 0.01 * random_matrix(200, 2, 8);
    LearnOptions opt;
    opt.subspace_size = 200;
    auto M = learn(X, Xn, X, {1e-8, 1e-8, 1.0, 1.0, 1e-6}, opt);
    for (int j : {0, 17, 101, 199}) {
        FilterState s = initial_state(M);
        s.n = M.Kbar.row(j).transpose();
        const Eigen::VectorXd mu = reconstruct_mean(s, M);
        CHECK((mu - X.row(j).transpose()).norm() <= 0.01 * X.row(j).norm());
    }
}

TEST_CASE("noiseless periodic flow is predicted one step ahead")
{
    Eigen::MatrixXd X, Xn;
    circle(200, X, Xn);
    LearnOptions opt;
    opt.subspace_size = 199;
    auto M = learn(X, Xn, X, {1e-6, 1e-6, 1.0, 1.0, 1e-6}, opt);
    auto g = project(M, 60);
    FilterState s = initial_state(M);
    double se = 0;
    int cnt = 0;
    for (int t = 0; t < 60; ++t) {
        auto post = innovation_update(s, X.row(t).transpose(), g, M);
        s = prediction_update(post, M, &g);
        if (t >= 3) {
            se += (reconstruct_mean(s, M) - X.row(t + 1).transpose()).squaredNorm();
            ++cnt;
        }
    }
    CHECK(std::sqrt(se / cnt) < 0.01);
}

TEST_CASE("filtering beats the prior-only run")
{
    int wins = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        LinearSystem sys;
        std::mt19937_64 rng(seed);
        Eigen::MatrixXd xs, ys;
        sys.simulate(201, Eigen::Vector2d(1, 0), rng, xs, ys);
        LearnOptions opt;
        opt.subspace_size = 100;
        opt.seed = seed;
        auto M = learn(xs.topRows(200), xs.bottomRows(200), ys.topRows(200), {1e-4, 1e-4, 1.0, 1.0, 1e-3}, opt);
        auto g = project(M, 40);
        FilterState f = initial_state(M), p = initial_state(M);
        double ef = 0, ep = 0;
        for (int t = 0; t < 40; ++t) {
            auto post = innovation_update(f, ys.row(t).transpose(), g, M);
            f = prediction_update(post, M, &g);
            p.is_posterior = true;
            p = prediction_update(p, M);
            ef += (reconstruct_mean(f, M) - xs.row(t + 1).transpose()).squaredNorm();
            ep += (reconstruct_mean(p, M) - xs.row(t + 1).transpose()).squaredNorm();
        }
        wins += ef < ep;
        ++total;
    }
    CHECK(wins >= 9);
}

TEST_CASE("classical Kalman filter oracle")
{
    auto r = kalman_tracking(0);
    MESSAGE("rmse vs kf " << r.rmse_vs_kf << " kf vs truth " << r.kf_vs_truth);
    CHECK(r.rmse_vs_kf < 0.02);
}

TEST_CASE("state windows")
{
    ChunkConfig ch;
    std::vector<double> flow = random_series(1000, 9);
    StateWindowConfig w;
    CHECK(window_count(flow.size(), w, ch) == 140);
    auto blocks = window_blocks(flow, w, ch);
    REQUIRE(blocks.size() == 3);
    CHECK(blocks[0].rows() == 140);
    CHECK(blocks[0].cols() == 102);
    CHECK(blocks[2].cols() == 302);

    StateWindowConfig one;
    one.horizons_s = {1.0};
    auto reds = fit_window_reducers({window_blocks(flow, one, ch)}, 80);
    auto sw = build_state_windows(flow, one, ch, reds);
    CHECK(sw.states == sw.observations);

    std::vector<double> zeros(1000, 0.0);
    auto zb = window_blocks(zeros, w, ch);
    for (auto& b : zb) CHECK(b.isZero(0));
    CHECK(error_code_of([&] { window_blocks(std::vector<double>(250, 1.0), w, ch); }) == Errc::FlowTooShort);

    // 10 s flow: 200 x 102 frames, observation Gram over the same frames is 200 x 200
    auto s = stft(flow, ch);
    CHECK(s.frames.rows() == 200);
    CHECK(gram(s.frames, s.frames, {KernelFamily::gaussian, 1.0, 1.0}).rows() == 200);
}
