#pragma once

#include <string>

#include "srlfd/grad/parameters.hpp"

namespace srlfd::grad {

// Parameter container, shared by every module that persists weights:
//
//   "SRLFD1"                        6 bytes
//   repeated until end of file:
//     name length   u32
//     name          bytes
//     rank          u32
//     shape         rank x u64
//     payload       prod(shape) x f64, little-endian
inline constexpr const char* kCheckpointMagic = "SRLFD1";

void save_checkpoint(const std::string& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::string& path);

}  // namespace srlfd::grad
