#include "hyperrank/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "hyperrank/errors.hpp"

namespace hyperrank::io {

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

template <typename T>
std::vector<T> read_array(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw IndexIntegrityError(e.what());
  }
  if (bytes.size() % sizeof(T) != 0) {
    throw IndexIntegrityError("'" + path.string() + "' has a truncated element");
  }
  std::vector<T> out(bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

template std::vector<std::uint32_t> read_array<std::uint32_t>(const std::filesystem::path&);
template std::vector<std::uint64_t> read_array<std::uint64_t>(const std::filesystem::path&);
template std::vector<float> read_array<float>(const std::filesystem::path&);

}  // namespace hyperrank::io
