#include "netforge/fire.hpp"

#include "netforge/error.hpp"

namespace netforge {

void check_fire_dims(const FireDims& dims) {
  if (dims.s1x1 == 0 || dims.e1x1 == 0 || dims.e3x3 == 0) {
    throw ConstructionError("fire dims must all be positive");
  }
  if (dims.s1x1 >= dims.e1x1 + dims.e3x3) {
    throw ConstructionError("fire squeeze width " + std::to_string(dims.s1x1) +
                            " must be less than e1x1 + e3x3 = " +
                            std::to_string(dims.e1x1 + dims.e3x3));
  }
}

FireExpansion expand_fire(const FireDims& dims, std::size_t in_channels) {
  check_fire_dims(dims);
  if (in_channels == 0) throw ConstructionError("fire input must have channels");
  return FireExpansion{
      {FireStage{"squeeze", in_channels, {dims.s1x1, 1, 1, 0}},
       FireStage{"expand1x1", dims.s1x1, {dims.e1x1, 1, 1, 0}},
       FireStage{"expand3x3", dims.s1x1, {dims.e3x3, 3, 1, 1}}},
      dims.out_channels()};
}

ParamCount fire_param_count(const FireDims& dims, std::size_t in_channels) {
  check_fire_dims(dims);
  return {in_channels * dims.s1x1 + dims.s1x1 * dims.e1x1 + 9 * dims.s1x1 * dims.e3x3,
          dims.s1x1 + dims.e1x1 + dims.e3x3};
}

}  // namespace netforge
