#include "sidx/kmeans.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>

#include "sidx/common.hpp"

namespace sidx {

Centroids::Centroids(std::size_t k, std::size_t d, std::vector<float> data)
    : k_(k), d_(d), data_(std::move(data)) {
  if (data_.size() != k * d) throw ConfigError("centroid data size mismatch");
}

CentroidScanner::CentroidScanner(const Centroids& centroids)
    : CentroidScanner(centroids.data(), centroids.k(), centroids.d()) {}

CentroidScanner::CentroidScanner(std::span<const float> data, std::size_t k, std::size_t d)
    : k_(k), d_(d), cols_(k * d) {
  if (data.size() < k * d) throw ConfigError("centroid scanner: data too short");
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t t = 0; t < d; ++t) cols_[t * k + j] = data[j * d + t];
  }
}

void CentroidScanner::distances(std::span<const float> x, std::span<double> out) const {
  assert(x.size() == d_ && out.size() == k_);
  double* acc = out.data();
  std::fill_n(acc, k_, 0.0);
  for (std::size_t t = 0; t < d_; ++t) {
    const double xt = x[t];
    const float* col = cols_.data() + t * k_;
    for (std::size_t j = 0; j < k_; ++j) {
      const double diff = xt - static_cast<double>(col[j]);
      acc[j] += diff * diff;
    }
  }
}

std::pair<std::size_t, double> CentroidScanner::nearest(std::span<const float> x,
                                                        std::vector<double>& scratch) const {
  scratch.resize(k_);
  distances(x, scratch);
  std::size_t best = 0;
  for (std::size_t j = 1; j < k_; ++j) {
    if (scratch[j] < scratch[best]) best = j;
  }
  return {best, scratch[best]};
}

std::size_t nearest_centroid(const Centroids& centroids, std::span<const float> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.k(); ++c) {
    const double dist = squared_l2(x, centroids.row(c));
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return best;
}

std::vector<std::size_t> nearest_centroids(const Centroids& centroids, std::span<const float> x,
                                           std::size_t count) {
  std::vector<std::pair<double, std::size_t>> dist(centroids.k());
  for (std::size_t c = 0; c < centroids.k(); ++c) dist[c] = {squared_l2(x, centroids.row(c)), c};
  count = std::min(count, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(count), dist.end());
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = dist[i].second;
  return out;
}

namespace {

// Counts distinct rows, stopping early once `limit` is reached.
std::size_t count_distinct(MatrixView points, std::size_t limit) {
  std::unordered_set<std::string_view> seen;
  const auto* base = reinterpret_cast<const char*>(points.data.data());
  const std::size_t row_bytes = points.d * sizeof(float);
  for (std::size_t i = 0; i < points.n() && seen.size() < limit; ++i) {
    seen.emplace(base + i * row_bytes, row_bytes);
  }
  return seen.size();
}

Centroids seed_plus_plus(MatrixView points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.n();
  Centroids c(k, points.d);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  std::copy_n(points.row(pick).begin(), points.d, c.row(0).begin());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_l2(points.row(i), c.row(0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t j = 1; j < k; ++j) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Guard against rounding landing on an already-chosen point.
      if (d2[pick] == 0.0) {
        pick = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
      }
    } else {
      pick = first(rng);
    }
    std::copy_n(points.row(pick).begin(), points.d, c.row(j).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_l2(points.row(i), c.row(j)));
    }
  }
  return c;
}

// Returns whether any assignment changed; writes per-point distances.
bool assign(MatrixView points, const Centroids& c, std::vector<std::uint32_t>& assignment,
            std::vector<double>& dist) {
  bool changed = false;
  const CentroidScanner scanner(c);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < points.n(); ++i) {
    const auto [j, best_d] = scanner.nearest(points.row(i), scratch);
    const auto best = static_cast<std::uint32_t>(j);
    if (assignment[i] != best) changed = true;
    assignment[i] = best;
    dist[i] = best_d;
  }
  return changed;
}

void update_means(MatrixView points, const std::vector<std::uint32_t>& assignment, Centroids& c,
                  std::vector<std::size_t>& counts) {
  const std::size_t d = points.d;
  std::vector<double> sums(c.k() * d, 0.0);
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t i = 0; i < points.n(); ++i) {
    const auto x = points.row(i);
    double* s = sums.data() + assignment[i] * d;
    for (std::size_t t = 0; t < d; ++t) s[t] += x[t];
    ++counts[assignment[i]];
  }
  for (std::size_t j = 0; j < c.k(); ++j) {
    if (counts[j] == 0) continue;
    auto row = c.row(j);
    for (std::size_t t = 0; t < d; ++t) {
      row[t] = static_cast<float>(sums[j * d + t] / static_cast<double>(counts[j]));
    }
  }
}

void recompute_mean(MatrixView points, const std::vector<std::uint32_t>& assignment,
                    std::uint32_t cluster, Centroids& c) {
  std::vector<double> s(points.d, 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.n(); ++i) {
    if (assignment[i] != cluster) continue;
    const auto x = points.row(i);
    for (std::size_t t = 0; t < points.d; ++t) s[t] += x[t];
    ++count;
  }
  if (count == 0) return;
  auto row = c.row(cluster);
  for (std::size_t t = 0; t < points.d; ++t) {
    row[t] = static_cast<float>(s[t] / static_cast<double>(count));
  }
}

// Each empty cluster takes the farthest member of the cluster with the largest
// distortion; the donor's mean is then recomputed.
void repair_empty(MatrixView points, std::vector<std::uint32_t>& assignment, Centroids& c,
                  std::vector<std::size_t>& counts) {
  for (std::size_t e = 0; e < c.k(); ++e) {
    if (counts[e] != 0) continue;
    std::vector<double> sse(c.k(), 0.0);
    std::vector<double> dist(points.n());
    for (std::size_t i = 0; i < points.n(); ++i) {
      dist[i] = squared_l2(points.row(i), c.row(assignment[i]));
      sse[assignment[i]] += dist[i];
    }
    std::size_t donor = 0;
    for (std::size_t j = 1; j < c.k(); ++j) {
      if (counts[j] > 1 && (counts[donor] <= 1 || sse[j] > sse[donor])) donor = j;
    }
    if (counts[donor] <= 1) return;  // nothing left to split
    std::size_t far = points.n();
    for (std::size_t i = 0; i < points.n(); ++i) {
      if (assignment[i] == donor && (far == points.n() || dist[i] > dist[far])) far = i;
    }
    assignment[far] = static_cast<std::uint32_t>(e);
    --counts[donor];
    counts[e] = 1;
    std::copy_n(points.row(far).begin(), points.d, c.row(e).begin());
    recompute_mean(points, assignment, static_cast<std::uint32_t>(donor), c);
  }
}

}  // namespace

KMeansResult kmeans(MatrixView points, const KMeansParams& params) {
  if (points.n() == 0) throw ConfigError("kmeans: no input points");
  if (params.k == 0) throw ConfigError("kmeans: k must be >= 1");

  KMeansResult result;
  result.requested_k = params.k;
  std::size_t k = params.k;
  const std::size_t distinct = count_distinct(points, k);
  if (distinct < k) {
    warn("kmeans: k=" + std::to_string(k) + " exceeds the " + std::to_string(distinct) +
         " distinct points; using k=" + std::to_string(distinct));
    k = distinct;
  }

  std::mt19937_64 rng(params.seed);
  Centroids c = seed_plus_plus(points, k, rng);
  std::vector<std::uint32_t> assignment(points.n(), std::numeric_limits<std::uint32_t>::max());
  std::vector<double> dist(points.n());
  std::vector<std::size_t> counts(k);

  assign(points, c, assignment, dist);
  result.distortion.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));
  for (std::size_t it = 0; it < params.max_iters; ++it) {
    update_means(points, assignment, c, counts);
    repair_empty(points, assignment, c, counts);
    const bool changed = assign(points, c, assignment, dist);
    result.distortion.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  result.centroids = std::move(c);
  result.assignment = std::move(assignment);
  return result;
}

}  // namespace sidx
