#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "netforge/kernels.hpp"

namespace netforge {

// Tunable dimensions of a Fire module: a 1x1 squeeze layer feeding parallel
// 1x1 and 3x3 expand layers whose outputs are concatenated.
struct FireDims {
  std::size_t s1x1 = 0;
  std::size_t e1x1 = 0;
  std::size_t e3x3 = 0;

  std::size_t out_channels() const { return e1x1 + e3x3; }
  bool operator==(const FireDims&) const = default;
};

// Throws ConstructionError unless all dims are positive and s1x1 < e1x1 + e3x3.
void check_fire_dims(const FireDims& dims);

struct FireStage {
  std::string name;  // "squeeze", "expand1x1" or "expand3x3"
  std::size_t in_channels;
  kernels::ConvParams conv;
};

// Expanded form of a Fire module. Each stage is a convolution followed by a
// ReLU; both expand stages read the squeeze output and are concatenated
// (expand1x1 channels first) to form the module output.
struct FireExpansion {
  std::array<FireStage, 3> stages;
  std::size_t out_channels;

  const FireStage& squeeze() const { return stages[0]; }
  const FireStage& expand1x1() const { return stages[1]; }
  const FireStage& expand3x3() const { return stages[2]; }
};

FireExpansion expand_fire(const FireDims& dims, std::size_t in_channels);

struct ParamCount {
  std::size_t weights = 0;
  std::size_t biases = 0;

  std::size_t total() const { return weights + biases; }
  bool operator==(const ParamCount&) const = default;
};

// weights = in*s1x1 + s1x1*e1x1 + 9*s1x1*e3x3, biases = s1x1 + e1x1 + e3x3
ParamCount fire_param_count(const FireDims& dims, std::size_t in_channels);

}  // namespace netforge
