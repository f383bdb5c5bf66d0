#pragma once

#include "fgk/spectral.hpp"
#include "fgk/trace_io.hpp"

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace fgk {

struct FlowSignature {
    Eigen::VectorXd vector; // mean |X_k| over the first K frames, L/2 + 1 entries
    int flow_index = 0;
    int frames_used = 0;
};

struct FlowGroup {
    int group_id = 0;
    std::vector<int> members; // indices into the clustered flow list
    Eigen::VectorXd centroid;
};

struct ClusterOptions {
    int max_groups = 20;
    double distance_threshold = 0.5; // relative to the median pairwise signature distance
    int K = 20;
    bool from_first_activity = true;
};

// frames start at the first active frame when from_first_activity
FlowSignature signature(const FlowTrace& flow, const ChunkConfig& chunk, int K, bool from_first_activity = true);

struct Clustering {
    std::vector<FlowGroup> groups;
    std::vector<int> ungrouped; // singletons and clusters beyond max_groups
    std::vector<FlowSignature> signatures;
    double threshold = 0; // absolute distance used for the cut
};

// average-linkage agglomerative; threshold is absolute
std::vector<std::vector<int>> average_linkage(const Eigen::MatrixXd& D, double threshold);

Clustering cluster(const std::vector<FlowTrace>& flows, const ChunkConfig& chunk, const ClusterOptions& opt);

// absolute cut computed from signatures: relative threshold x median pairwise distance
double absolute_threshold(const std::vector<FlowSignature>& sigs, double relative);

std::string format_assignments(const std::vector<FlowTrace>& flows, const Clustering& c);

} // namespace fgk
