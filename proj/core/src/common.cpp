#include "sidx/common.hpp"

#include <iostream>
#include <mutex>

namespace sidx {

namespace {

std::mutex g_sink_mutex;
WarningSink g_sink;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(Metric m) {
  return m == Metric::l2 ? "l2" : "cosine";
}

Metric parse_metric(std::string_view s) {
  if (s == "l2") return Metric::l2;
  if (s == "cosine") return Metric::cosine;
  throw ConfigError("unknown metric '" + std::string(s) + "' (expected l2 or cosine)");
}

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_sink_mutex);
  g_sink = std::move(sink);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "[sidx] warning: " << message << '\n';
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  // FNV-1a over the name, folded into the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ h);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) + index);
}

}  // namespace sidx
