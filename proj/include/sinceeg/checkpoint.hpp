#pragma once

#include "sinceeg/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sinceeg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian):
//   "SEEG" | u32 version | u32 C, T, L, F1, D, F2, N | f64 dropout_p, celu_alpha, fs
//   then per parameter tensor in build order: u64 length | length x f64
std::vector<std::uint8_t> encode_checkpoint(const Model& model);
Model decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Model& model, const std::string& path);
/// Throws FormatError on bad magic/version, truncation, trailing bytes or a
/// parameter count that disagrees with count_parameters.
Model load_checkpoint(const std::string& path);

}  // namespace sinceeg
