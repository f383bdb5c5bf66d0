#include "fgk/trace_io.hpp"

#include "fgk/errors.hpp"
#include "fgk/fsutil.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace fgk {

namespace {

constexpr double kbit_per_byte = 8.0 / 1000.0;

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        auto b = s.find_first_not_of(" \t");
        auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line, const std::string& msg)
{
    throw Error(Errc::ParseError, origin + ":" + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& s, const std::string& origin, std::size_t line)
{
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        parse_fail(origin, line, "bad number '" + s + "'");
    return v;
}

long long to_int(const std::string& s, const std::string& origin, std::size_t line)
{
    long long v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        parse_fail(origin, line, "bad integer '" + s + "'");
    return v;
}

int to_port(const std::string& s, const std::string& origin, std::size_t line)
{
    long long v = to_int(s, origin, line);
    if (v < 0 || v > 65535) parse_fail(origin, line, "port out of range");
    return static_cast<int>(v);
}

Protocol to_proto(const std::string& s, const std::string& origin, std::size_t line)
{
    if (s == "TCP" || s == "tcp") return Protocol::TCP;
    if (s == "UDP" || s == "udp") return Protocol::UDP;
    parse_fail(origin, line, "unknown protocol '" + s + "'");
}

bool blank(const std::string& l)
{
    return l.find_first_not_of(" \t\r") == std::string::npos;
}

std::vector<FlowTrace> parse_events(std::istream& in, const std::string& origin, double ts_s)
{
    std::string line;
    std::size_t ln = 0;
    bool header = false;
    std::map<FlowKey, std::vector<PacketEvent>> by_key;
    while (std::getline(in, line)) {
        ++ln;
        if (blank(line)) continue;
        auto f = split_csv(line);
        if (!header) {
            static const std::vector<std::string> want{"src", "src_port", "dst", "dst_port", "proto", "ts_s", "bytes"};
            if (f != want) parse_fail(origin, ln, "expected header src,src_port,dst,dst_port,proto,ts_s,bytes");
            header = true;
            continue;
        }
        if (f.size() != 7) parse_fail(origin, ln, "expected 7 fields");
        FlowKey k{f[0], to_port(f[1], origin, ln), f[2], to_port(f[3], origin, ln), to_proto(f[4], origin, ln)};
        double ts = to_double(f[5], origin, ln);
        long long b = to_int(f[6], origin, ln);
        if (b < 0) parse_fail(origin, ln, "negative byte count");
        by_key[k].push_back({ts, b});
    }
    std::vector<FlowTrace> out;
    for (auto& [k, ev] : by_key) {
        std::stable_sort(ev.begin(), ev.end(),
                         [](const PacketEvent& a, const PacketEvent& b) { return a.timestamp_s < b.timestamp_s; });
        out.push_back(bin_packets(ev, k, ts_s));
    }
    return out;
}

struct BinnedSection {
    FlowKey key;
    double start = 0;
    double ts = 0.01;
    std::map<long long, double> bins;
};

std::vector<FlowTrace> parse_binned(std::istream& in, const std::string& origin)
{
    std::string line;
    std::size_t ln = 0;
    bool header = false;
    std::map<std::string, BinnedSection> sections;
    while (std::getline(in, line)) {
        ++ln;
        if (blank(line)) continue;
        auto f = split_csv(line);
        if (!f.empty() && f[0] == "#flow") {
            // #flow,flow_id,src,src_port,dst,dst_port,proto,start_time,sample_interval_s
            if (f.size() != 9) parse_fail(origin, ln, "#flow line needs 9 fields");
            BinnedSection s;
            s.key = FlowKey{f[2], to_port(f[3], origin, ln), f[4], to_port(f[5], origin, ln), to_proto(f[6], origin, ln)};
            s.start = to_double(f[7], origin, ln);
            s.ts = to_double(f[8], origin, ln);
            if (!(s.ts > 0)) parse_fail(origin, ln, "sample interval must be positive");
            if (sections.count(f[1])) parse_fail(origin, ln, "duplicate #flow id " + f[1]);
            sections.emplace(f[1], std::move(s));
            continue;
        }
        if (!f.empty() && !f[0].empty() && f[0][0] == '#') continue;
        if (!header) {
            if (f != std::vector<std::string>{"flow_id", "t_index", "kbit"})
                parse_fail(origin, ln, "expected header flow_id,t_index,kbit");
            header = true;
            continue;
        }
        if (f.size() != 3) parse_fail(origin, ln, "expected 3 fields");
        auto it = sections.find(f[0]);
        if (it == sections.end()) parse_fail(origin, ln, "row for undeclared flow " + f[0]);
        long long t = to_int(f[1], origin, ln);
        if (t < 0) parse_fail(origin, ln, "negative t_index");
        double v = to_double(f[2], origin, ln);
        if (v < 0) parse_fail(origin, ln, "negative kbit");
        it->second.bins[t] += v;
    }
    // merge sections by key
    std::map<FlowKey, BinnedSection> merged;
    for (auto& [id, s] : sections) {
        auto it = merged.find(s.key);
        if (it == merged.end()) {
            merged.emplace(s.key, s);
            continue;
        }
        if (it->second.ts != s.ts || it->second.start != s.start)
            throw Error(Errc::ParseError, origin + ": flow " + id + " repeats a key with a different timebase");
        for (auto& [t, v] : s.bins) it->second.bins[t] += v;
    }
    std::vector<FlowTrace> out;
    for (auto& [k, s] : merged) {
        FlowTrace tr;
        tr.key = k;
        tr.start_time = s.start;
        tr.sample_interval_s = s.ts;
        long long n = s.bins.empty() ? 0 : s.bins.rbegin()->first + 1;
        tr.samples.assign(static_cast<std::size_t>(n), 0.0);
        for (auto& [t, v] : s.bins) tr.samples[static_cast<std::size_t>(t)] = v;
        out.push_back(std::move(tr));
    }
    return out;
}

} // namespace

std::string fmt_num(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string protocol_name(Protocol p)
{
    return p == Protocol::TCP ? "TCP" : "UDP";
}

Protocol parse_protocol(const std::string& s)
{
    return to_proto(s, "<arg>", 0);
}

std::string flow_label(const FlowKey& k)
{
    return k.src_addr + ":" + std::to_string(k.src_port) + "-" + k.dst_addr + ":" + std::to_string(k.dst_port) + "/" +
           protocol_name(k.protocol);
}

FlowTrace bin_packets(const std::vector<PacketEvent>& events, const FlowKey& key, double sample_interval_s)
{
    if (events.empty()) throw Error(Errc::EmptyFlow, "no events for " + flow_label(key));
    if (!(sample_interval_s > 0)) throw Error(Errc::BadConfig, "sample interval must be positive");
    for (auto& e : events)
        if (e.bytes < 0) throw Error(Errc::MalformedEvent, "negative byte count");
    double start = events.front().timestamp_s;
    // tolerance keeps events on exact bin edges in the right bin
    auto index = [&](double ts) {
        double r = (ts - start) / sample_interval_s + 1e-9;
        return r < 0 ? std::size_t(0) : static_cast<std::size_t>(std::floor(r));
    };
    std::size_t n = index(events.back().timestamp_s) + 1;
    std::vector<std::int64_t> bytes(n, 0);
    for (auto& e : events) {
        std::size_t i = index(e.timestamp_s);
        if (i >= n) i = n - 1;
        bytes[i] += e.bytes;
    }
    FlowTrace tr;
    tr.key = key;
    tr.start_time = start;
    tr.sample_interval_s = sample_interval_s;
    tr.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) tr.samples[i] = static_cast<double>(bytes[i]) * kbit_per_byte;
    return tr;
}

std::vector<FlowTrace> parse_traces(const std::string& text, TraceFormat format, const std::string& origin,
                                    double sample_interval_s)
{
    std::istringstream in(text);
    auto out = format == TraceFormat::csv_events ? parse_events(in, origin, sample_interval_s) : parse_binned(in, origin);
    std::stable_sort(out.begin(), out.end(), [](const FlowTrace& a, const FlowTrace& b) {
        if (a.key != b.key) return a.key < b.key;
        return a.start_time < b.start_time;
    });
    return out;
}

std::vector<FlowTrace> load_traces(const std::string& path, TraceFormat format, double sample_interval_s)
{
    return parse_traces(read_file(path), format, path, sample_interval_s);
}

std::string format_binned(const std::vector<FlowTrace>& flows)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& f = flows[i];
        os << "#flow," << i << ',' << f.key.src_addr << ',' << f.key.src_port << ',' << f.key.dst_addr << ','
           << f.key.dst_port << ',' << protocol_name(f.key.protocol) << ',' << fmt_num(f.start_time) << ','
           << fmt_num(f.sample_interval_s) << '\n';
    }
    os << "flow_id,t_index,kbit\n";
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& s = flows[i].samples;
        for (std::size_t t = 0; t < s.size(); ++t) {
            // zeros are implied except the last bin, which fixes the length
            if (s[t] == 0.0 && t + 1 != s.size()) continue;
            os << i << ',' << t << ',' << fmt_num(s[t]) << '\n';
        }
    }
    return os.str();
}

void write_binned(const std::string& path, const std::vector<FlowTrace>& flows)
{
    write_file_atomic(path, format_binned(flows));
}

std::vector<Split> leave_one_out_splits(const std::vector<FlowTrace>& group)
{
    if (group.size() < 2) throw Error(Errc::InsufficientGroup, "need at least 2 flows, got " + std::to_string(group.size()));
    std::vector<Split> out;
    out.reserve(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
        Split s;
        s.test = group[i];
        for (std::size_t j = 0; j < group.size(); ++j)
            if (j != i) s.train.push_back(group[j]);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace fgk
