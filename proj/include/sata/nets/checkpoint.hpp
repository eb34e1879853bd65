#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sata/nets/policy.hpp"

namespace sata::nets {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "SATACKPT", u32 version, u32 joints, u64 iteration, f64 learning
/// rate, u64 Adam steps (policy, estimator), three network specs
/// (u32 input, u32 output, u32 hidden count, u32 widths..., u32 activation),
/// then u32 block count and per block u64 length plus float32 values.
/// All integers and floats are little-endian.
std::string serialize_checkpoint(const PolicyBundle& bundle);

/// Throws FormatError on a bad magic, unknown version, truncation, or a
/// joint count different from `expected_joints`.
PolicyBundle parse_checkpoint(const std::string& bytes, std::optional<int> expected_joints = std::nullopt);

void save_checkpoint(const std::filesystem::path& path, const PolicyBundle& bundle);
PolicyBundle load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_joints = std::nullopt);

}  // namespace sata::nets
