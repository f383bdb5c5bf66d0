#pragma once

#include "fgk/clustering.hpp"
#include "fgk/evaluation.hpp"
#include "fgk/hyperopt.hpp"

#include <cstdint>
#include <string>

namespace fgk {

struct SynthConfig {
    int groups = 10;
    int flows_per_group = 8;
    double duration_s = 12.0;
    double jitter = 0.1;
    std::uint64_t template_seed = 1;
};

struct RunConfig {
    struct Paths {
        std::string input;
        std::string output = "out";
        std::string model;
        std::string format = "csv_binned";
    } paths;
    ChunkConfig chunk;
    ExperimentConfig experiment;
    FkkfHyperparams hyper;
    bool search_enabled = false;
    SearchSpace search;
    SearchOptions search_options;
    ClusterOptions clustering;
    SynthConfig synth;
    std::uint64_t seed = 0;

    void validate() const;
    StateWindowConfig windows() const;
};

RunConfig parse_config(const std::string& yaml_text, const std::string& origin = "<memory>");
RunConfig load_config(const std::string& path);

// stable key order, shortest round-trip numbers
std::string canonical_json(const RunConfig& c);
RunConfig config_from_json(const std::string& json_text);
std::string config_hash(const RunConfig& c);

std::string format_yaml(const RunConfig& c);

} // namespace fgk
