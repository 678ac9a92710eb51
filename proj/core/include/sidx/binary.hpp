#pragma once

// Little-endian encoding helpers shared by the on-disk formats. Every SIDX
// file starts with the 4-byte magic "SIDX", a u32 format version and a u8 kind.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "sidx/common.hpp"

namespace sidx::binary {

inline constexpr char kMagic[4] = {'S', 'I', 'D', 'X'};
inline constexpr std::uint32_t kVersion = 1;

enum class Kind : std::uint8_t { features = 1, labels = 2, index = 3, pq = 4 };

namespace detail {
template <typename T>
T byteswap(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}
}  // namespace detail

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
      v = detail::byteswap(v);
    }
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  template <typename T>
  void put_all(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
      const auto* p = reinterpret_cast<const unsigned char*>(values.data());
      buf_.insert(buf_.end(), p, p + values.size_bytes());
    } else {
      for (T v : values) put(v);
    }
  }

  void put_header(Kind kind) {
    buf_.insert(buf_.end(), std::begin(kMagic), std::end(kMagic));
    put(kVersion);
    put(static_cast<std::uint8_t>(kind));
  }

  const std::vector<unsigned char>& bytes() const noexcept { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<unsigned char> bytes) : buf_(std::move(bytes)) {}

  std::uint64_t offset() const noexcept { return pos_; }
  std::uint64_t remaining() const noexcept { return buf_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == buf_.size(); }

  template <typename T>
  T get(const char* what) {
    static_assert(std::is_arithmetic_v<T>);
    require(sizeof(T), what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
      v = detail::byteswap(v);
    }
    pos_ += sizeof(T);
    return v;
  }

  template <typename T>
  void get_all(std::span<T> out, const char* what) {
    require(out.size_bytes(), what);
    std::memcpy(out.data(), buf_.data() + pos_, out.size_bytes());
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
      for (T& v : out) v = detail::byteswap(v);
    }
    pos_ += out.size_bytes();
  }

  /// Checks magic, version and kind.
  void expect_header(Kind kind) {
    require(4, "magic");
    if (std::memcmp(buf_.data(), kMagic, 4) != 0) throw FormatError("bad magic", 0);
    pos_ = 4;
    const std::uint64_t at = pos_;
    if (get<std::uint32_t>("version") != kVersion) {
      throw FormatError("unsupported format version", at);
    }
    const std::uint64_t kind_at = pos_;
    const auto k = get<std::uint8_t>("kind");
    if (k != static_cast<std::uint8_t>(kind)) {
      throw FormatError("unexpected file kind " + std::to_string(k) + ", expected " +
                            std::to_string(static_cast<int>(kind)),
                        kind_at);
    }
  }

  void require(std::uint64_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(std::string("truncated payload reading ") + what, pos_);
    }
  }

 private:
  std::vector<unsigned char> buf_;
  std::uint64_t pos_ = 0;
};

/// Reads a whole file into memory; throws Error if it cannot be opened.
std::vector<unsigned char> read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes);

}  // namespace sidx::binary
