#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eigenspline/eigensys.hpp"

namespace eigenspline {

// Binary cache layout (all integers and floats little-endian):
//
//   offset  size      field
//   0       4         magic "EIGC"
//   4       4         format version (u32, currently 1)
//   8       4         kernel id (u32, KernelKind value)
//   12      8         N (u64)
//   20      8N        s_1..s_N (f64)
//   ...     8N        gamma_1..gamma_N (f64)
//   ...     8N^2      V, column-major (f64)
//   end-4   4         CRC-32 of every preceding byte (u32)

inline constexpr std::uint32_t kCacheFormatVersion = 1;

std::vector<std::byte> save_cache(const EigenSystemCache& cache);
/// Throws FormatError (magic/version/kernel id) or CorruptionError
/// (truncation, size mismatch, checksum).
EigenSystemCache load_cache(std::span<const std::byte> bytes);

/// CRC-32 stored in the trailer of a serialized cache.
std::uint32_t cache_checksum(std::span<const std::byte> bytes);

void write_cache_file(const EigenSystemCache& cache, const std::filesystem::path& path);
EigenSystemCache read_cache_file(const std::filesystem::path& path);

/// "k,eigenvalue" CSV of (k, gamma_k / N), k starting at 1.
std::string eigenvalue_csv(const EigenSystemCache& cache);

}  // namespace eigenspline
