#pragma once

#include <string>

#include "network.hpp"

namespace sdc {

// Binary model format, magic "SDCM" version 1. Layout:
//   "SDCM" | version u32 | input c,h,w u32x3 (flat inputs: 0,0,d) |
//   layer count u32 | per layer: kind u8 + kind-specific u32 fields |
//   weights+biases per weight layer, little-endian float32, row-major.
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);

std::string model_summary_json(const Network& net);

}  // namespace sdc
