#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "repu/network.hpp"

namespace repu {

inline constexpr int network_format_version = 1;

/// JSON text: {"format_version":1, "input_dim", "declared_bounds", "layers":[{rows, cols,
/// weights (row-major), bias, powers}]}. Doubles are written shortest-round-trip.
std::string serialize(const MixedRepuNetwork& net);
/// Throws FormatError naming the offending layer.
MixedRepuNetwork deserialize(std::string_view text);

MixedRepuNetwork load_network(const std::filesystem::path& path);
void save_network(const MixedRepuNetwork& net, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Write to a sibling temp file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace repu
