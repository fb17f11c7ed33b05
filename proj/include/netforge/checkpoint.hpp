#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "netforge/graph.hpp"
#include "netforge/params.hpp"

namespace netforge {

struct Checkpoint {
  ParamSet<float> weights;
  ParamSet<float> momentum;  // same keys as weights
  std::uint32_t epoch = 0;   // completed epochs

  bool operator==(const Checkpoint& other) const {
    return weights == other.weights && momentum == other.momentum && epoch == other.epoch;
  }
};

// Binary layout, all integers little-endian:
//   "RSQV" | u8 version=1 | u32 tensor count
//   per tensor: u16 name length | name | u8 dtype (0 = f32) | u8 rank |
//               rank x u32 extents | row-major f32 payload
//   u32 epoch
// Weights are named "<node>.<weight>", momentum buffers "<node>.<weight>.momentum".
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);  // throws FormatError

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also checks every tensor against the graph; throws CompatibilityError naming the node.
Checkpoint load_checkpoint(const std::filesystem::path& path, const Graph& graph);
void check_compatible(const Checkpoint& ckpt, const Graph& graph);

}  // namespace netforge
