#pragma once

#include <cstdint>
#include <string>

#include "vrl/policy.hpp"

namespace vrl {

// Binary checkpoint: 8-byte magic "VRLCKPT1", then little-endian
// u32 version, u32 feature_dim, u32 num_templates, u32 num_bins,
// u64 config hash, then the parameter tensors as f64 rows
// (template head, verdict head, the three bin heads).
struct Checkpoint {
  PolicyParams params;
  std::uint64_t config_hash = 0;
};

void save_checkpoint(const std::string& path, const PolicyParams& params,
                     std::uint64_t config_hash);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vrl
