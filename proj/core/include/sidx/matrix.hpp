#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace sidx {

/// Non-owning view over a row-major n x d float matrix.
struct MatrixView {
  std::span<const float> data;
  std::size_t d = 1;

  std::size_t n() const noexcept { return d == 0 ? 0 : data.size() / d; }
  std::span<const float> row(std::size_t i) const { return data.subspan(i * d, d); }
};

// Distance kernels accumulate in double.

inline double squared_l2(std::span<const float> a, std::span<const float> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += t * t;
  }
  return s;
}

inline double dot(std::span<const float> a, std::span<const float> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

inline double squared_norm(std::span<const float> a) { return dot(a, a); }

/// Cosine similarity; -inf when either vector has zero norm so such items
/// rank last.
inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  const double na = squared_norm(a);
  const double nb = squared_norm(b);
  if (na <= 0.0 || nb <= 0.0) return -std::numeric_limits<double>::infinity();
  return dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace sidx
