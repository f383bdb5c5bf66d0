#include "fgk/clustering.hpp"

#include "fgk/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace fgk {

FlowSignature signature(const FlowTrace& flow, const ChunkConfig& chunk, int K, bool from_first_activity)
{
    if (K < 1) throw Error(Errc::BadConfig, "K must be positive");
    chunk.validate();
    const int s = chunk.stride();
    const int L = chunk.length();
    if (flow.samples.empty()) throw Error(Errc::FlowTooShort, "flow yields no frame");
    std::size_t first = 0;
    if (from_first_activity) {
        auto it = std::find_if(flow.samples.begin(), flow.samples.end(), [](double v) { return v != 0.0; });
        if (it != flow.samples.end()) first = static_cast<std::size_t>(it - flow.samples.begin()) / static_cast<std::size_t>(s) * s;
    }
    std::vector<double> tail(flow.samples.begin() + static_cast<long>(first), flow.samples.end());
    const int available = static_cast<int>((tail.size() + static_cast<std::size_t>(s) - 1) / static_cast<std::size_t>(s));
    const int k = std::min(K, available);
    if (k < 1) throw Error(Errc::FlowTooShort, "flow yields no frame");
    tail.resize(static_cast<std::size_t>(k - 1) * s + L, 0.0);
    FlowSignature sig;
    sig.flow_index = 0;
    sig.frames_used = k;
    sig.vector = Eigen::VectorXd::Zero(L / 2 + 1);
    for (int t = 0; t < k; ++t) {
        const Eigen::VectorXd f = forward_frame(tail.data() + static_cast<std::size_t>(t) * s, L);
        for (int b = 0; b <= L / 2; ++b) sig.vector[b] += std::hypot(f[2 * b], f[2 * b + 1]);
    }
    sig.vector /= k;
    return sig;
}

std::vector<std::vector<int>> average_linkage(const Eigen::MatrixXd& D, double threshold)
{
    const int n = static_cast<int>(D.rows());
    std::vector<std::vector<int>> clusters(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) clusters[static_cast<std::size_t>(i)] = {i};
    std::vector<bool> alive(static_cast<std::size_t>(n), true);
    Eigen::MatrixXd d = D;
    for (;;) {
        double best = std::numeric_limits<double>::infinity();
        int bi = -1, bj = -1;
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (int j = i + 1; j < n; ++j)
                if (alive[j] && d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
        }
        if (bi < 0 || !(best <= threshold)) break;
        auto& a = clusters[static_cast<std::size_t>(bi)];
        auto& b = clusters[static_cast<std::size_t>(bj)];
        const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
        // Lance-Williams for average linkage
        for (int k = 0; k < n; ++k) {
            if (!alive[k] || k == bi || k == bj) continue;
            d(bi, k) = d(k, bi) = (na * d(bi, k) + nb * d(bj, k)) / (na + nb);
        }
        a.insert(a.end(), b.begin(), b.end());
        std::sort(a.begin(), a.end());
        b.clear();
        alive[bj] = false;
    }
    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; ++i)
        if (alive[i]) out.push_back(clusters[static_cast<std::size_t>(i)]);
    return out;
}

double absolute_threshold(const std::vector<FlowSignature>& sigs, double relative)
{
    std::vector<double> d;
    for (std::size_t i = 0; i < sigs.size(); ++i)
        for (std::size_t j = i + 1; j < sigs.size(); ++j) d.push_back((sigs[i].vector - sigs[j].vector).norm());
    if (d.empty()) return 0.0;
    std::sort(d.begin(), d.end());
    const std::size_t h = d.size() / 2;
    const double med = d.size() % 2 ? d[h] : 0.5 * (d[h - 1] + d[h]);
    return relative * med;
}

Clustering cluster(const std::vector<FlowTrace>& flows, const ChunkConfig& chunk, const ClusterOptions& opt)
{
    if (flows.empty()) throw Error(Errc::InsufficientData, "no flows to cluster");
    if (opt.max_groups < 1) throw Error(Errc::BadConfig, "max_groups must be positive");
    if (!(opt.distance_threshold >= 0)) throw Error(Errc::BadConfig, "distance threshold must be non-negative");
    Clustering c;
    c.signatures.resize(flows.size());
    const int nf = static_cast<int>(flows.size());
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < nf; ++i) {
        try {
            c.signatures[static_cast<std::size_t>(i)] = signature(flows[static_cast<std::size_t>(i)], chunk, opt.K, opt.from_first_activity);
            c.signatures[static_cast<std::size_t>(i)].flow_index = i;
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    Eigen::MatrixXd D(nf, nf);
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nf; ++j) D(i, j) = (c.signatures[i].vector - c.signatures[j].vector).norm();
    c.threshold = absolute_threshold(c.signatures, opt.distance_threshold);
    auto parts = average_linkage(D, c.threshold);
    // larger clusters first, ties by lowest member index
    std::stable_sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.front() < b.front();
    });
    for (auto& p : parts) {
        if (p.size() >= 2 && static_cast<int>(c.groups.size()) < opt.max_groups) {
            FlowGroup g;
            g.group_id = static_cast<int>(c.groups.size());
            g.members = p;
            g.centroid = Eigen::VectorXd::Zero(c.signatures.front().vector.size());
            for (int i : p) g.centroid += c.signatures[static_cast<std::size_t>(i)].vector;
            g.centroid /= static_cast<double>(p.size());
            c.groups.push_back(std::move(g));
        } else {
            c.ungrouped.insert(c.ungrouped.end(), p.begin(), p.end());
        }
    }
    std::sort(c.ungrouped.begin(), c.ungrouped.end());
    return c;
}

std::string format_assignments(const std::vector<FlowTrace>& flows, const Clustering& c)
{
    struct Row {
        int flow;
        int group;
        double dist;
    };
    std::vector<Row> rows;
    for (auto& g : c.groups)
        for (int i : g.members) rows.push_back({i, g.group_id, (c.signatures[static_cast<std::size_t>(i)].vector - g.centroid).norm()});
    for (int i : c.ungrouped) rows.push_back({i, -1, 0.0});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.flow < b.flow; });
    std::string out = "flow_id,group_id,distance_to_centroid\n";
    for (auto& r : rows)
        out += fmt::format("{},{},{}\n", flow_label(flows[static_cast<std::size_t>(r.flow)].key), r.group, fmt_num(r.dist));
    return out;
}

} // namespace fgk
