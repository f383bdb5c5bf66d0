#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fgk {

// temp file + rename
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

} // namespace fgk
