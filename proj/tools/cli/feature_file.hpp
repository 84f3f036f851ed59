#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specgrad/core_matrix.hpp"

namespace specgrad::cli {

/// Binary feature batch: 16-byte header ("GCPF", u32 d, u32 N, u32 count)
/// followed by count column-major d x N blocks of little-endian f64.
struct FeatureBatch {
  std::uint32_t d = 0;
  std::uint32_t n = 0;
  std::vector<Matrix> blocks;
};

std::string encode_features(const FeatureBatch& batch);
/// Throws std::invalid_argument on a bad magic, truncated data or a size
/// mismatch.
FeatureBatch decode_features(const std::string& bytes);

}  // namespace specgrad::cli
