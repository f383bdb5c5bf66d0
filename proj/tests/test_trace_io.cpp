#include "fgk/trace_io.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace fgk;
using namespace fgk::testing;

namespace {

FlowKey key(int port = 1234) { return {"10.0.0.1", port, "10.0.0.2", 80, Protocol::TCP}; }

} // namespace

TEST_CASE("bin_packets sums bytes per interval")
{
    auto f = bin_packets({{0.000, 125}, {0.005, 125}}, key(), 0.01);
    REQUIRE(f.samples.size() == 1);
    CHECK(f.samples[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(error_code_of([] { bin_packets({}, key(), 0.01); }) == Errc::EmptyFlow);
    CHECK(error_code_of([] { bin_packets({{0.0, -1}}, key(), 0.01); }) == Errc::MalformedEvent);
}

TEST_CASE("ten seconds of constant traffic against direct summation")
{
    std::vector<PacketEvent> ev;
    for (int i = 0; i < 1000; ++i) ev.push_back({i * 0.01 + 0.002, 1250});
    auto f = bin_packets(ev, key(), 0.01);
    REQUIRE(f.samples.size() == 1000);
    // oracle: every event in its own [i T_S, (i+1) T_S) window, 1250 B = 10 kbit
    for (int i = 0; i < 1000; ++i) {
        double direct = 0;
        for (auto& e : ev)
            if (e.timestamp_s - ev.front().timestamp_s >= i * 0.01 - 1e-12 && e.timestamp_s - ev.front().timestamp_s < (i + 1) * 0.01 - 1e-12)
                direct += e.bytes * 8.0 / 1000.0;
        CHECK(f.samples[static_cast<std::size_t>(i)] == direct);
        CHECK(f.samples[static_cast<std::size_t>(i)] == 10.0);
    }
    CHECK(f.duration() == doctest::Approx(10.0));
}

TEST_CASE("byte totals survive binning exactly")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> T(0, 5);
    std::uniform_int_distribution<int> B(0, 1500);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PacketEvent> ev;
        std::int64_t total = 0;
        for (int i = 0; i < 400; ++i) {
            ev.push_back({T(rng), B(rng)});
            total += ev.back().bytes;
        }
        std::sort(ev.begin(), ev.end(), [](auto& a, auto& b) { return a.timestamp_s < b.timestamp_s; });
        auto f = bin_packets(ev, key(), 0.01);
        std::int64_t recovered = 0;
        for (double s : f.samples) recovered += std::llround(s * 1000.0 / 8.0);
        CHECK(recovered == total);
        for (double s : f.samples) CHECK(s >= 0.0);
    }
}

TEST_CASE("micro-ordering inside a bin does not matter")
{
    std::vector<PacketEvent> a{{0.0, 10}, {0.011, 20}, {0.012, 30}, {0.015, 40}, {0.031, 5}};
    std::vector<PacketEvent> b{{0.0, 10}, {0.015, 40}, {0.011, 20}, {0.012, 30}, {0.031, 5}};
    CHECK(bin_packets(a, key(), 0.01).samples == bin_packets(b, key(), 0.01).samples);
}

TEST_CASE("events csv parses into sorted flows")
{
    const std::string csv = "src,src_port,dst,dst_port,proto,ts_s,bytes\n"
                            "10.0.0.9,5,10.0.0.2,80,TCP,1.000,125\n"
                            "10.0.0.1,5,10.0.0.2,80,TCP,1.000,125\n"
                            "10.0.0.1,5,10.0.0.2,80,TCP,1.005,125\n"
                            "10.0.0.1,5,10.0.0.2,80,TCP,1.020,250\n";
    auto flows = parse_traces(csv, TraceFormat::csv_events);
    REQUIRE(flows.size() == 2);
    CHECK(flows[0].key.src_addr == "10.0.0.1");
    CHECK(flows[0].samples == std::vector<double>{2.0, 0.0, 2.0});
    CHECK(flows[1].samples == std::vector<double>{1.0});
    CHECK(parse_traces("", TraceFormat::csv_events).empty());
    CHECK(parse_traces("", TraceFormat::csv_binned).empty());
}

TEST_CASE("parse errors carry the line number")
{
    const std::string bad = "src,src_port,dst,dst_port,proto,ts_s,bytes\n"
                            "10.0.0.1,5,10.0.0.2,80,TCP,1.0,125\n"
                            "10.0.0.1,5,10.0.0.2,80,TCP,oops,125\n";
    try {
        parse_traces(bad, TraceFormat::csv_events, "f.csv");
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("f.csv:3") != std::string::npos);
    }
    CHECK(error_code_of([] { parse_traces("a,b\n", TraceFormat::csv_events); }) == Errc::ParseError);
    CHECK(error_code_of([] { load_traces("/nonexistent/x.csv", TraceFormat::csv_events); }) == Errc::IoError);
}

TEST_CASE("binned format round trips and sums duplicates")
{
    std::vector<FlowTrace> flows(2);
    flows[0].key = key(1);
    flows[0].samples = random_series(1000, 1);
    flows[0].samples[10] = 0.0;
    flows[1].key = key(2);
    flows[1].samples = random_series(1000, 2);
    flows[1].start_time = 3.25;
    auto back = parse_traces(format_binned(flows), TraceFormat::csv_binned);
    REQUIRE(back.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(back[i].key == flows[i].key);
        CHECK(back[i].samples == flows[i].samples);
        CHECK(back[i].start_time == flows[i].start_time);
    }
    const std::string dup = "#flow,a,1.1.1.1,1,2.2.2.2,2,UDP,0,0.01\n"
                            "flow_id,t_index,kbit\n"
                            "a,0,1.5\n"
                            "a,2,1\n"
                            "a,0,2.5\n";
    auto d = parse_traces(dup, TraceFormat::csv_binned);
    REQUIRE(d.size() == 1);
    // spreadsheet: bin 0 = 1.5 + 2.5, bin 1 empty, bin 2 = 1
    CHECK(d[0].samples == std::vector<double>{4.0, 0.0, 1.0});
    CHECK(d[0].key.protocol == Protocol::UDP);
}

TEST_CASE("leave-one-out splits")
{
    for (int n : {2, 4, 8}) {
        std::vector<FlowTrace> g(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)].key = key(i);
        auto s = leave_one_out_splits(g);
        REQUIRE(s.size() == static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            CHECK(s[static_cast<std::size_t>(i)].test.key == key(i));
            CHECK(s[static_cast<std::size_t>(i)].train.size() == static_cast<std::size_t>(n - 1));
            for (auto& t : s[static_cast<std::size_t>(i)].train) CHECK(!(t.key == key(i)));
        }
    }
    CHECK(error_code_of([] { leave_one_out_splits({FlowTrace{}}); }) == Errc::InsufficientGroup);
}
