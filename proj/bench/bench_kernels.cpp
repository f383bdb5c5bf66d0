#include "fgk/kernelcore.hpp"
#include "fgk/spectral.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fgk;

namespace {

Eigen::MatrixXd data(Eigen::Index r, Eigen::Index c, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    Eigen::MatrixXd M(r, c);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = N(rng);
    return M;
}

std::vector<double> series(std::size_t n)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 100.0);
    std::vector<double> x(n);
    for (auto& v : x) v = U(rng);
    return x;
}

KernelSpec spec()
{
    KernelSpec k;
    k.bandwidth = 10.0;
    return k;
}

void BM_gram(benchmark::State& st)
{
    const auto A = data(st.range(0), 102, 1), B = data(200, 102, 2);
    for (auto _ : st) benchmark::DoNotOptimize(gram(A, B, spec()));
}

void BM_gram_serial(benchmark::State& st)
{
    const auto A = data(st.range(0), 102, 1), B = data(200, 102, 2);
    for (auto _ : st) benchmark::DoNotOptimize(gram_serial(A, B, spec()));
}

void BM_sq_dists(benchmark::State& st)
{
    const auto A = data(st.range(0), 102, 1), B = data(st.range(0), 102, 2);
    for (auto _ : st) benchmark::DoNotOptimize(sq_dists(A, B));
}

void BM_sq_dists_serial(benchmark::State& st)
{
    const auto A = data(st.range(0), 102, 1), B = data(st.range(0), 102, 2);
    for (auto _ : st) benchmark::DoNotOptimize(sq_dists_serial(A, B));
}

void BM_stft(benchmark::State& st)
{
    const auto x = series(static_cast<std::size_t>(st.range(0)));
    ChunkConfig c;
    for (auto _ : st) benchmark::DoNotOptimize(stft(x, c));
}

void BM_stft_serial(benchmark::State& st)
{
    const auto x = series(static_cast<std::size_t>(st.range(0)));
    ChunkConfig c;
    for (auto _ : st) benchmark::DoNotOptimize(stft_serial(x, c));
}

} // namespace

BENCHMARK(BM_gram)->Arg(500)->Arg(2000);
BENCHMARK(BM_gram_serial)->Arg(500)->Arg(2000);
BENCHMARK(BM_sq_dists)->Arg(500)->Arg(2000);
BENCHMARK(BM_sq_dists_serial)->Arg(500)->Arg(2000);
BENCHMARK(BM_stft)->Arg(1000)->Arg(60000);
BENCHMARK(BM_stft_serial)->Arg(1000)->Arg(60000);

BENCHMARK_MAIN();
