#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hyperrank::io {

static_assert(std::endian::native == std::endian::little,
              "binary index and cache files are little-endian; big-endian hosts are unsupported");

// 64-bit FNV-1a. Stable across processes and platforms.
constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

template <typename T>
std::string_view as_bytes(std::span<const T> values) {
  return {reinterpret_cast<const char*>(values.data()), values.size_bytes()};
}

template <typename T>
void write_array(const std::filesystem::path& path, std::span<const T> values) {
  write_file_atomic(path, as_bytes(values));
}

// Reads a flat little-endian array; throws IndexIntegrityError if the size is not a
// multiple of sizeof(T).
template <typename T>
std::vector<T> read_array(const std::filesystem::path& path);

extern template std::vector<std::uint32_t> read_array<std::uint32_t>(const std::filesystem::path&);
extern template std::vector<std::uint64_t> read_array<std::uint64_t>(const std::filesystem::path&);
extern template std::vector<float> read_array<float>(const std::filesystem::path&);

}  // namespace hyperrank::io
