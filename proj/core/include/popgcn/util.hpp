#pragma once

#include "popgcn/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace popgcn {

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
/// Used instead of std::uniform_real_distribution so that reference
/// implementations can reproduce the exact stream.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection; n must be positive.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

/// Standard normal via Box-Muller over uniform01.
double standard_normal(std::mt19937_64& rng);

/// Fisher-Yates over uniform_below.
template <typename T>
void shuffle(std::vector<T>& values, std::mt19937_64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double value);

void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace popgcn
