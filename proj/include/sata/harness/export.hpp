#pragma once

#include <filesystem>

namespace sata::harness {

/// Long-format rows (run, seed, iteration, metric, value) from every
/// metrics.csv under `root`, written to `output`. Values are copied verbatim.
/// Returns the number of data rows; an empty tree yields a header-only file.
std::size_t export_tidy(const std::filesystem::path& root, const std::filesystem::path& output);

}  // namespace sata::harness
