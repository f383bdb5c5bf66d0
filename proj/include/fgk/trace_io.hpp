#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace fgk {

enum class Protocol { TCP, UDP };

struct FlowKey {
    std::string src_addr;
    int src_port = 0;
    std::string dst_addr;
    int dst_port = 0;
    Protocol protocol = Protocol::TCP;

    auto operator<=>(const FlowKey&) const = default;
    bool operator==(const FlowKey&) const = default;
};

struct FlowTrace {
    FlowKey key;
    double start_time = 0.0;
    double sample_interval_s = 0.01;
    std::vector<double> samples; // kbit per interval

    double duration() const { return static_cast<double>(samples.size()) * sample_interval_s; }
};

struct PacketEvent {
    double timestamp_s;
    std::int64_t bytes;
};

enum class TraceFormat { csv_binned, csv_events };

FlowTrace bin_packets(const std::vector<PacketEvent>& events, const FlowKey& key, double sample_interval_s);

// sample_interval_s applies to csv_events; binned files carry their own
std::vector<FlowTrace> load_traces(const std::string& path, TraceFormat format, double sample_interval_s = 0.01);
std::vector<FlowTrace> parse_traces(const std::string& text, TraceFormat format, const std::string& origin = "<memory>",
                                    double sample_interval_s = 0.01);

std::string format_binned(const std::vector<FlowTrace>& flows);
void write_binned(const std::string& path, const std::vector<FlowTrace>& flows);

struct Split {
    std::vector<FlowTrace> train;
    FlowTrace test;
};

std::vector<Split> leave_one_out_splits(const std::vector<FlowTrace>& group);

std::string protocol_name(Protocol p);
Protocol parse_protocol(const std::string& s);
std::string flow_label(const FlowKey& k);

// shortest round-trip text for a double
std::string fmt_num(double v);

} // namespace fgk
