#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace diffnet {

// Shortest round-trip decimal form of a double (std::to_chars). Used for every
// number that lands in a CSV or plot file so reruns are byte-comparable.
std::string format_double(double x);

// Write-temp-then-rename so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& target, std::string_view content);

// FNV-1a over bytes; stable content hash for output-directory addressing.
std::uint64_t fnv1a64(std::string_view bytes);

// Worker cap: min(requested, DIFFNET_THREADS if set, hardware_concurrency).
int worker_count(int requested);

// Uniform double in [0, 1) from a raw 64-bit draw, independent of libstdc++'s
// distribution implementation (keeps seeded placements reproducible everywhere).
inline double canonical_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace diffnet
