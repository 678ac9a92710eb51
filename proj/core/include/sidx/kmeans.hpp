#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sidx/matrix.hpp"

namespace sidx {

/// k centroids of dimension d, row-major.
class Centroids {
 public:
  Centroids() = default;
  Centroids(std::size_t k, std::size_t d) : k_(k), d_(d), data_(k * d, 0.0f) {}
  Centroids(std::size_t k, std::size_t d, std::vector<float> data);

  std::size_t k() const noexcept { return k_; }
  std::size_t d() const noexcept { return d_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * d_, d_}; }
  std::span<float> row(std::size_t i) { return {data_.data() + i * d_, d_}; }
  std::span<const float> data() const noexcept { return data_; }
  MatrixView view() const noexcept { return {data_, d_}; }

  bool operator==(const Centroids&) const = default;

 private:
  std::size_t k_ = 0;
  std::size_t d_ = 0;
  std::vector<float> data_;
};

/// Index of the nearest centroid by squared L2; ties go to the lowest index.
std::size_t nearest_centroid(const Centroids& centroids, std::span<const float> x);

/// Indices of the `count` nearest centroids, nearest first (ties by index).
std::vector<std::size_t> nearest_centroids(const Centroids& centroids, std::span<const float> x,
                                           std::size_t count);

/// Centroids stored dimension-major so one query is scored against all of
/// them in a loop that vectorizes across centroids. Distances are summed in
/// double in dimension order, so they match squared_l2 bit for bit.
class CentroidScanner {
 public:
  CentroidScanner() = default;
  explicit CentroidScanner(const Centroids& centroids);
  /// Views `k` consecutive rows of `data` (row-major, dimension d).
  CentroidScanner(std::span<const float> data, std::size_t k, std::size_t d);
  std::size_t k() const noexcept { return k_; }
  std::size_t d() const noexcept { return d_; }
  /// Squared L2 distance from x to every centroid; out.size() must equal k.
  void distances(std::span<const float> x, std::span<double> out) const;
  /// Nearest centroid (ties to the lowest index) and its squared distance.
  /// `scratch` is resized as needed.
  std::pair<std::size_t, double> nearest(std::span<const float> x,
                                         std::vector<double>& scratch) const;

 private:
  std::size_t k_ = 0;
  std::size_t d_ = 0;
  std::vector<float> cols_;  // d x k
};

struct KMeansParams {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iters = 25;
};

struct KMeansResult {
  Centroids centroids;
  std::vector<std::uint32_t> assignment;
  /// Distortion (sum of squared distances) after every assignment step;
  /// non-increasing.
  std::vector<double> distortion;
  /// Requested k; larger than centroids.k() when the data held fewer distinct
  /// points.
  std::size_t requested_k = 0;
  bool converged = false;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iters` updates ran. An empty cluster takes over the point
/// farthest from the centroid of the highest-distortion cluster.
/// Throws ConfigError for empty input or k == 0.
KMeansResult kmeans(MatrixView points, const KMeansParams& params);

}  // namespace sidx
