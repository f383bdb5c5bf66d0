#pragma once

#include "fgk/pipeline.hpp"

#include <string>

namespace fgk {

inline constexpr std::uint32_t model_format_version = 1;

// "FGKKF" | u32 version | u64 json length | json header | little-endian doubles
std::string serialize_model(const FlowModel& model);
FlowModel deserialize_model(const std::string& bytes, const std::string& origin = "<memory>");

void save_model(const std::string& path, const FlowModel& model);
FlowModel load_model(const std::string& path);

} // namespace fgk
