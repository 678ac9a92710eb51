#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sidx {

using ItemId = std::uint64_t;
using LabelId = std::uint32_t;

enum class Metric { l2, cosine };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content. `offset()` is the byte offset (or line number for
/// text formats) where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset);
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Invalid parameters or inconsistent inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-fatal diagnostics (clamped parameters, deduplicated ids, ...) go through
// a process-wide sink. The default sink writes to stderr.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

/// Derives an independent sub-seed, e.g. derive_seed(seed, "kmeans").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace sidx
