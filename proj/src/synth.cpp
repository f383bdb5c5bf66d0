#include "fgk/synth.hpp"

#include "fgk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

namespace fgk {

void BurstTemplate::validate() const
{
    if (!(rise_duration_s > 0 && body_duration_s > 0 && impulse_period_s > 0 && inter_burst_gap_s > 0))
        throw Error(Errc::BadTemplate, "durations must be positive");
    if (!(peak_kbit > 0)) throw Error(Errc::BadTemplate, "peak must be positive");
    if (!(impulse_jitter >= 0 && impulse_jitter < 1 && amplitude_jitter >= 0 && amplitude_jitter < 1))
        throw Error(Errc::BadTemplate, "jitters must lie in [0, 1)");
}

std::vector<double> generate_flow(const BurstTemplate& tpl, double duration_s, double T_S, std::uint64_t seed,
                                  int group_index, int flow_index)
{
    tpl.validate();
    if (!(T_S > 0)) throw Error(Errc::BadTemplate, "sample interval must be positive");
    if (tpl.rise_duration_s > duration_s) throw Error(Errc::BadTemplate, "rise longer than the flow");
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(group_index), static_cast<std::uint32_t>(flow_index)};
    std::mt19937_64 rng(sq);
    auto U = [&](double a, double b) { return a == b ? a : std::uniform_real_distribution<double>(a, b)(rng); };

    const long N = std::lround(duration_s / T_S);
    std::vector<double> x(static_cast<std::size_t>(N), 0.0);
    const long nr = std::lround(tpl.rise_duration_s / T_S);
    const long nb = std::lround(tpl.body_duration_s / T_S);
    const long pp = std::max(1L, std::lround(tpl.impulse_period_s / T_S));
    const double ij = tpl.impulse_jitter, aj = tpl.amplitude_jitter;
    double t = tpl.inter_burst_gap_s * U(0.5, 1.0);
    while (t < duration_s) {
        const long r0 = std::lround(t / T_S);
        for (long i = 0; i < nr; i += pp) {
            const long j = r0 + i + std::lround(U(-ij, ij) * static_cast<double>(pp));
            double frac = static_cast<double>(i + pp) / static_cast<double>(nr);
            if (tpl.shape == RiseShape::exponential) frac = std::expm1(3.0 * std::min(frac, 1.0)) / std::expm1(3.0);
            const double h = tpl.peak_kbit * frac * (1 + U(-aj, aj));
            if (j >= r0 && j < N && j < r0 + nr) x[j] = std::max(x[j], h);
        }
        for (long i = 0; i < nb; ++i) {
            const long j = r0 + nr + i;
            const double h = tpl.peak_kbit * (1 + U(-aj, aj));
            if (j < N) x[j] = h;
        }
        t += tpl.rise_duration_s + tpl.body_duration_s + tpl.inter_burst_gap_s * U(1 - ij, 1 + ij);
    }
    return x;
}

std::vector<FlowTrace> generate_group(const BurstTemplate& tpl, int n_flows, double duration_s, double T_S,
                                      std::uint64_t seed, int group_index)
{
    if (n_flows < 2) throw Error(Errc::BadTemplate, "a group needs at least 2 flows");
    tpl.validate();
    std::vector<FlowTrace> out(static_cast<std::size_t>(n_flows));
    std::exception_ptr err;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_flows; ++i) {
        try {
            FlowTrace& f = out[static_cast<std::size_t>(i)];
            f.key.src_addr = "10.0." + std::to_string(group_index / 250) + "." + std::to_string(group_index % 250 + 1);
            f.key.src_port = 40000 + i;
            f.key.dst_addr = "10.1.0.1";
            f.key.dst_port = 80;
            f.key.protocol = Protocol::TCP;
            f.start_time = 0.0;
            f.sample_interval_s = T_S;
            f.samples = generate_flow(tpl, duration_s, T_S, seed, group_index, i);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

std::vector<BurstTemplate> random_templates(int count, std::uint64_t seed, double jitter)
{
    std::mt19937_64 rng(seed);
    auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    static constexpr double periods[] = {0.01, 0.03, 0.05, 0.1};
    std::vector<BurstTemplate> out;
    for (int g = 0; g < count; ++g) {
        BurstTemplate t;
        t.rise_duration_s = U(0.3, 0.9);
        t.body_duration_s = U(0.8, 2.0);
        t.peak_kbit = U(50, 500);
        t.impulse_period_s = periods[std::uniform_int_distribution<int>(0, 3)(rng)];
        t.impulse_jitter = jitter;
        t.amplitude_jitter = jitter;
        t.inter_burst_gap_s = U(3, 5);
        out.push_back(t);
    }
    return out;
}

} // namespace fgk
