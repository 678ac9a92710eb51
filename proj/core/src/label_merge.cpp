#include "sidx/label_merge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sidx {

CooccurrenceMatrix::CooccurrenceMatrix(std::size_t n_labels, std::vector<std::uint64_t> counts)
    : n_(n_labels), counts_(std::move(counts)) {
  if (counts_.size() != n_ * n_) throw ConfigError("co-occurrence matrix must be square");
}

CooccurrenceMatrix cooccurrence_matrix(const LabelMatrix& labels, std::size_t k) {
  CooccurrenceMatrix c(labels.n_labels());
  for (std::size_t r = 0; r < labels.n(); ++r) {
    const auto top = top_labels(labels.row(r), k);
    for (std::size_t a = 0; a < top.size(); ++a) {
      ++c.at(top[a], top[a]);
      for (std::size_t b = a + 1; b < top.size(); ++b) {
        ++c.at(top[a], top[b]);
        ++c.at(top[b], top[a]);
      }
    }
  }
  return c;
}

namespace {

// Centers a row; returns the squared norm of the centered vector.
double center(std::span<const double> in, std::vector<double>& out) {
  out.assign(in.begin(), in.end());
  if (out.empty()) return 0.0;
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  double ss = 0.0;
  for (double& v : out) {
    v -= mean;
    ss += v * v;
  }
  return ss;
}

double correlation(const std::vector<double>& za, double ssa, const std::vector<double>& zb,
                   double ssb) {
  if (ssa <= 0.0 || ssb <= 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < za.size(); ++i) s += za[i] * zb[i];
  return std::clamp(s / std::sqrt(ssa * ssb), -1.0, 1.0);
}

std::vector<double> row_as_double(const CooccurrenceMatrix& c, std::size_t i) {
  const auto r = c.row(i);
  return {r.begin(), r.end()};
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("pearson: length mismatch");
  std::vector<double> za, zb;
  const double ssa = center(a, za);
  const double ssb = center(b, zb);
  return correlation(za, ssa, zb, ssb);
}

double label_similarity(const CooccurrenceMatrix& c, std::size_t i, std::size_t j) {
  if (i >= c.n_labels() || j >= c.n_labels()) throw ConfigError("label id out of range");
  const auto a = row_as_double(c, i);
  const auto b = row_as_double(c, j);
  return pearson(a, b);
}

std::vector<double> similarity_matrix(const CooccurrenceMatrix& c) {
  const std::size_t n = c.n_labels();
  std::vector<std::vector<double>> z(n);
  std::vector<double> ss(n);
  for (std::size_t i = 0; i < n; ++i) ss[i] = center(row_as_double(c, i), z[i]);
  std::vector<double> s(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      s[i * n + j] = s[j * n + i] = correlation(z[i], ss[i], z[j], ss[j]);
    }
  }
  return s;
}

LabelMapping merge_labels(const CooccurrenceMatrix& c, std::size_t target_cells) {
  const std::size_t n = c.n_labels();
  if (target_cells == 0 || target_cells > n) {
    throw ConfigError("target_cells must lie in [1, " + std::to_string(n) + "], got " +
                      std::to_string(target_cells));
  }
  std::vector<double> dist = similarity_matrix(c);
  for (double& v : dist) v = 1.0 - v;
  auto D = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };

  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> parent(n);  // label -> surviving cluster representative
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best(n, n);
  std::vector<double> best_d(n, kInf);
  auto refresh = [&](std::size_t i) {
    best[i] = n;
    best_d[i] = kInf;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (D(i, j) < best_d[i]) {
        best_d[i] = D(i, j);
        best[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t clusters = n; clusters > target_cells; --clusters) {
    // Global minimum over (distance, smaller id, larger id).
    std::size_t a = n, b = n;
    double bd = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || best[i] == n) continue;
      const std::size_t lo = std::min(i, best[i]), hi = std::max(i, best[i]);
      if (best_d[i] < bd || (best_d[i] == bd && std::pair(lo, hi) < std::pair(a, b))) {
        bd = best_d[i];
        a = lo;
        b = hi;
      }
    }
    // Lance-Williams update for average linkage; b is absorbed into a.
    const double wa = static_cast<double>(size[a]);
    const double wb = static_cast<double>(size[b]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      D(a, k) = D(k, a) = (wa * D(a, k) + wb * D(b, k)) / (wa + wb);
    }
    active[b] = false;
    size[a] += size[b];
    for (std::size_t l = 0; l < n; ++l) {
      if (parent[l] == b) parent[l] = a;
    }
    refresh(a);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      if (best[k] == a || best[k] == b) {
        refresh(k);
      } else if (D(k, a) < best_d[k] || (D(k, a) == best_d[k] && a < best[k])) {
        best_d[k] = D(k, a);
        best[k] = a;
      }
    }
  }

  // Representatives are the smallest label of each cluster; number them in
  // ascending order.
  LabelMapping m;
  m.cell_of.resize(n);
  std::vector<std::uint32_t> cell_id(n, 0);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) cell_id[i] = next++;
  }
  for (std::size_t l = 0; l < n; ++l) m.cell_of[l] = cell_id[parent[l]];
  m.n_cells = next;
  return m;
}

}  // namespace sidx
