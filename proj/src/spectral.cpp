#include "fgk/spectral.hpp"

#include "fgk/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>

namespace fgk {

namespace {

Eigen::FFT<double>& fft_engine()
{
    // plans are cached per object, one per thread
    thread_local Eigen::FFT<double> f = [] {
        Eigen::FFT<double> e;
        e.SetFlag(Eigen::FFT<double>::HalfSpectrum);
        return e;
    }();
    return f;
}

} // namespace

int samples_for(double seconds, double ts)
{
    double r = seconds / ts;
    long n = std::lround(r);
    if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-6 * std::max(1.0, r))
        throw Error(Errc::BadConfig, "duration " + std::to_string(seconds) + " s is not a multiple of " +
                                         std::to_string(ts) + " s");
    return static_cast<int>(n);
}

int ChunkConfig::stride() const
{
    return samples_for(chunk_interval_s, sample_interval_s);
}

int ChunkConfig::length() const
{
    return samples_for(chunk_length_s, sample_interval_s);
}

void ChunkConfig::validate() const
{
    if (!(sample_interval_s > 0)) throw Error(Errc::BadConfig, "T_S must be positive");
    int s = stride();
    int L = length();
    if (s <= 1) throw Error(Errc::BadConfig, "T_C must exceed T_S");
    if (L < s) throw Error(Errc::BadConfig, "chunk length must be at least T_C");
}

int frame_dim(int L)
{
    return 2 * (L / 2 + 1);
}

std::vector<std::vector<double>> chunk(const std::vector<double>& series, const ChunkConfig& cfg)
{
    if (series.empty()) throw Error(Errc::EmptySeries, "cannot chunk an empty series");
    cfg.validate();
    const int s = cfg.stride();
    const int L = cfg.length();
    const std::size_t n = series.size();
    const std::size_t count = (n + s - 1) / s;
    std::vector<std::vector<double>> out(count, std::vector<double>(L, 0.0));
    for (std::size_t i = 0; i < count; ++i)
        for (int j = 0; j < L; ++j) {
            std::size_t k = i * s + j;
            if (k < n) out[i][j] = series[k];
        }
    return out;
}

Eigen::VectorXd forward_frame(const double* x, int L)
{
    if (L < 2) throw Error(Errc::ChunkTooShort, "chunk needs at least 2 samples");
    std::vector<double> in(x, x + L);
    std::vector<std::complex<double>> spec;
    fft_engine().fwd(spec, in);
    const int N = L / 2 + 1;
    Eigen::VectorXd f(2 * N);
    for (int k = 0; k < N; ++k) {
        f[2 * k] = spec[k].real();
        f[2 * k + 1] = spec[k].imag();
    }
    // exact zeros where the transform is real by symmetry
    f[1] = 0.0;
    if (L % 2 == 0) f[2 * N - 1] = 0.0;
    return f;
}

Eigen::VectorXd forward_frame(const std::vector<double>& c)
{
    return forward_frame(c.data(), static_cast<int>(c.size()));
}

std::vector<double> inverse_frame(const Eigen::VectorXd& frame, int L)
{
    if (L < 2) throw Error(Errc::ChunkTooShort, "chunk needs at least 2 samples");
    if (frame.size() != frame_dim(L))
        throw Error(Errc::FrameDimMismatch,
                    "frame has " + std::to_string(frame.size()) + " values, expected " + std::to_string(frame_dim(L)));
    const int N = L / 2 + 1;
    std::vector<std::complex<double>> spec(N);
    for (int k = 0; k < N; ++k) spec[k] = {frame[2 * k], frame[2 * k + 1]};
    // imaginary parts of DC and Nyquist only reach the imaginary output
    spec[0].imag(0.0);
    if (L % 2 == 0) spec[N - 1].imag(0.0);
    std::vector<double> out;
    fft_engine().inv(out, spec, L);
    out.resize(L);
    return out;
}

SpectralSeries stft(const std::vector<double>& series, const ChunkConfig& cfg)
{
    auto ch = chunk(series, cfg);
    const int L = cfg.length();
    SpectralSeries s;
    s.config = cfg;
    s.origin_length = static_cast<int>(series.size());
    s.frames.resize(static_cast<Eigen::Index>(ch.size()), frame_dim(L));
    const long count = static_cast<long>(ch.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) s.frames.row(i) = forward_frame(ch[i]).transpose();
    return s;
}

SpectralSeries stft_serial(const std::vector<double>& series, const ChunkConfig& cfg)
{
    auto ch = chunk(series, cfg);
    const int L = cfg.length();
    SpectralSeries s;
    s.config = cfg;
    s.origin_length = static_cast<int>(series.size());
    s.frames.resize(static_cast<Eigen::Index>(ch.size()), frame_dim(L));
    for (std::size_t i = 0; i < ch.size(); ++i) s.frames.row(static_cast<Eigen::Index>(i)) = forward_frame(ch[i]).transpose();
    return s;
}

Eigen::MatrixXd frames_at(const std::vector<double>& series, int stride, int L, int count)
{
    if (count < 0 || (count > 0 && static_cast<std::size_t>((count - 1) * stride + L) > series.size()))
        throw Error(Errc::FlowTooShort, "series too short for requested frames");
    Eigen::MatrixXd out(count, frame_dim(L));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < count; ++i) out.row(i) = forward_frame(series.data() + static_cast<std::size_t>(i) * stride, L).transpose();
    return out;
}

std::vector<double> overlap_average(const std::vector<std::vector<double>>& chunks, const std::vector<long>& starts,
                                    long from, long to)
{
    std::vector<double> acc(static_cast<std::size_t>(std::max(0L, to - from)), 0.0);
    std::vector<int> cnt(acc.size(), 0);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        for (std::size_t j = 0; j < chunks[i].size(); ++j) {
            long t = starts[i] + static_cast<long>(j);
            if (t < from || t >= to) continue;
            acc[t - from] += chunks[i][j];
            cnt[t - from] += 1;
        }
    }
    for (std::size_t k = 0; k < acc.size(); ++k)
        if (cnt[k] > 0) acc[k] /= cnt[k];
    return acc;
}

std::vector<double> reassemble(const SpectralSeries& s)
{
    if (s.frames.rows() == 0) throw Error(Errc::EmptySeries, "no frames");
    const int L = s.config.length();
    const int st = s.config.stride();
    if (s.frames.cols() != frame_dim(L))
        throw Error(Errc::FrameDimMismatch, "frame width does not match chunk length");
    std::vector<std::vector<double>> rec(static_cast<std::size_t>(s.frames.rows()));
    std::vector<long> starts(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        rec[i] = inverse_frame(s.frames.row(static_cast<Eigen::Index>(i)).transpose(), L);
        starts[i] = static_cast<long>(i) * st;
    }
    return overlap_average(rec, starts, 0, s.origin_length);
}

} // namespace fgk
