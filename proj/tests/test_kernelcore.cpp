#include "fgk/kernelcore.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>

using namespace fgk;
using namespace fgk::testing;

TEST_CASE("median heuristic")
{
    Eigen::MatrixXd two(2, 1);
    two << 0, 2;
    CHECK(median_heuristic(two, 500, 0) == 2.0);
    CHECK(error_code_of([] { median_heuristic(Eigen::MatrixXd::Ones(5, 3), 500, 0); }) == Errc::ZeroBandwidth);

    Eigen::MatrixXd grid(100, 2);
    for (int i = 0; i < 100; ++i) grid.row(i) << i % 10, i / 10;
    std::vector<double> d;
    for (int i = 0; i < 100; ++i)
        for (int j = i + 1; j < 100; ++j) d.push_back((grid.row(i) - grid.row(j)).squaredNorm());
    std::sort(d.begin(), d.end());
    const double med = 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]);
    CHECK(median_heuristic(grid, 100, 0) == doctest::Approx(std::sqrt(med)).epsilon(1e-14));

    Eigen::MatrixXd R = random_matrix(800, 4, 1);
    CHECK(median_heuristic(R, 300, 5) == median_heuristic(R, 300, 5));
}

TEST_CASE("gram against the naive double loop")
{
    KernelSpec k{KernelFamily::gaussian, 1.3, 0.7};
    Eigen::MatrixXd A = random_matrix(50, 10, 2), B = random_matrix(60, 10, 3);
    Eigen::MatrixXd G = gram(A, B, k);
    const double h = k.effective();
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 60; ++j) {
            double s = 0;
            for (int c = 0; c < 10; ++c) s += (A(i, c) - B(j, c)) * (A(i, c) - B(j, c));
            CHECK(std::abs(G(i, j) - std::exp(-s / (2 * h * h))) < 1e-12);
        }
    CHECK(max_abs(G - gram_serial(A, B, k)) < 1e-14);
    CHECK(max_abs(sq_dists(A, B) - sq_dists_serial(A, B)) < 1e-10);
    CHECK(error_code_of([&] { gram(A, random_matrix(3, 9, 4), k); }) == Errc::BadDimension);
}

TEST_CASE("gram closed forms and properties")
{
    KernelSpec k{KernelFamily::gaussian, 2.0, 1.5};
    Eigen::MatrixXd X = random_matrix(80, 6, 5);
    Eigen::MatrixXd G = gram(X, X, k);
    for (int i = 0; i < 80; ++i) CHECK(G(i, i) == 1.0);
    CHECK(max_abs(G - G.transpose()) == 0.0);
    CHECK(G.minCoeff() > 0.0);
    CHECK(G.maxCoeff() <= 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);

    Eigen::MatrixXd p(2, 1);
    p << 0, k.effective() * std::sqrt(2.0);
    CHECK(gram(p, p, k)(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    KernelSpec k3{KernelFamily::gaussian, 6.0, 1.5};
    CHECK(max_abs(gram(3.0 * X, 3.0 * X, k3) - G) < 1e-12);
}

TEST_CASE("kernel vector")
{
    KernelSpec k{KernelFamily::gaussian, 1.0, 1.0};
    Eigen::MatrixXd X = random_matrix(30, 4, 6);
    Eigen::VectorXd y = X.row(7).transpose();
    auto v = kernel_vector(X, y, k);
    CHECK(v[7] == 1.0);
    CHECK(max_abs(v - gram(X, y.transpose(), k).col(0)) <= 1e-15);
    Eigen::VectorXd far = Eigen::VectorXd::Constant(4, 1e3);
    CHECK(kernel_vector(X, far, k).maxCoeff() < 1e-6);
    CHECK(error_code_of([&] { kernel_vector(X, Eigen::VectorXd::Zero(3), k); }) == Errc::BadDimension);
    CHECK(error_code_of([] { KernelSpec{KernelFamily::gaussian, 0.0, 1.0}.validate(); }) == Errc::BadConfig);
}

TEST_CASE("pivoted Cholesky selection")
{
    KernelSpec k{KernelFamily::gaussian, 1.0, 1.0};
    Eigen::MatrixXd X = random_matrix(100, 3, 7);
    auto S = pivoted_cholesky_select(X, k, 20, 1e-6);
    CHECK(S.size() == 20);
    CHECK(std::is_sorted(S.begin(), S.end()));
    CHECK(std::adjacent_find(S.begin(), S.end()) == S.end());
    // duplicates leave no residual, so selection stops early
    Eigen::MatrixXd D(6, 1);
    D << 0, 0, 0, 5, 5, 5;
    auto S2 = pivoted_cholesky_select(D, k, 6, 1e-6);
    CHECK(S2 == std::vector<int>{0, 3});
}
