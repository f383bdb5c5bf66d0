#pragma once

#include "fgk/trace_io.hpp"

#include <cstdint>
#include <vector>

namespace fgk {

enum class RiseShape { linear, exponential };

struct BurstTemplate {
    double rise_duration_s = 0.5;
    double body_duration_s = 1.0;
    double peak_kbit = 100.0;
    double impulse_period_s = 0.05;
    double impulse_jitter = 0.1;
    double amplitude_jitter = 0.1;
    double inter_burst_gap_s = 4.0;
    RiseShape shape = RiseShape::linear;

    void validate() const;
};

std::vector<double> generate_flow(const BurstTemplate& tpl, double duration_s, double T_S, std::uint64_t seed,
                                  int group_index, int flow_index);

std::vector<FlowTrace> generate_group(const BurstTemplate& tpl, int n_flows, double duration_s, double T_S,
                                      std::uint64_t seed, int group_index = 0);

// varied templates drawn from one seed
std::vector<BurstTemplate> random_templates(int count, std::uint64_t seed, double jitter = 0.1);

} // namespace fgk
