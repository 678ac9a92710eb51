#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sidx/common.hpp"
#include "sidx/matrix.hpp"

namespace sidx {

/// Dense row-major matrix of n float vectors of dimension d. Item ids are the
/// row indices 0..n-1.
class FeatureSet {
 public:
  FeatureSet() = default;
  explicit FeatureSet(std::size_t d);
  /// Throws ConfigError on a size mismatch, d == 0 or a non-finite value.
  FeatureSet(std::size_t n, std::size_t d, std::vector<float> data);

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * d_, d_};
  }
  std::span<const float> data() const noexcept { return data_; }
  MatrixView view() const noexcept { return {data_, d_}; }

  bool operator==(const FeatureSet&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 1;
  std::vector<float> data_;
};

struct LabelScore {
  LabelId label = 0;
  float confidence = 0.0f;

  bool operator==(const LabelScore&) const = default;
};

/// Ranked labels of one item: confidence descending, ties by ascending label.
using LabelRow = std::span<const LabelScore>;

/// Sparse top-k classifier confidences, one row per item.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  /// Validates and sorts each row. Throws ConfigError on out-of-range labels,
  /// duplicate labels within a row, or confidences outside [0, 1].
  LabelMatrix(std::size_t n_labels, std::vector<std::vector<LabelScore>> rows);

  std::size_t n() const noexcept { return rows_.size(); }
  std::size_t n_labels() const noexcept { return n_labels_; }
  LabelRow row(std::size_t i) const { return rows_[i]; }
  const std::vector<std::vector<LabelScore>>& rows() const noexcept { return rows_; }

  /// Shortest stored row; 0 for an empty matrix.
  std::size_t min_row_length() const noexcept;

  bool operator==(const LabelMatrix&) const = default;

 private:
  std::size_t n_labels_ = 0;
  std::vector<std::vector<LabelScore>> rows_;
};

/// Sorts a row into canonical order (confidence desc, label asc).
void sort_label_row(std::vector<LabelScore>& row);

struct GroundTruthEntry {
  ItemId query_id = 0;
  std::vector<ItemId> relevant;  // sorted, unique, non-empty
  std::vector<ItemId> junk;      // sorted, unique, disjoint from relevant

  bool operator==(const GroundTruthEntry&) const = default;
};

struct GroundTruth {
  std::vector<GroundTruthEntry> entries;

  bool operator==(const GroundTruth&) const = default;
};

struct SyntheticConfig {
  std::size_t n_db = 20000;
  std::size_t n_queries = 200;
  std::size_t d = 64;
  std::size_t n_labels = 100;
  std::size_t clusters = 50;
  double label_noise = 0.1;
  std::uint64_t seed = 0;

  // Stored labels per row. Rows are dense when top_k >= n_labels.
  std::size_t top_k = 10;
  // Standard deviation of group centers; items scatter with unit variance.
  double center_spread = 1.5;
  // Group sizes follow a Zipf law with this exponent (0 = equal sizes).
  double size_skew = 1.0;
};

/// Number of labels in each group's characteristic label set.
inline constexpr std::size_t kGroupLabelCount = 5;

struct SyntheticDataset {
  FeatureSet db;
  FeatureSet queries;
  LabelMatrix db_labels;
  LabelMatrix query_labels;
  GroundTruth ground_truth;
  std::vector<std::uint32_t> db_group;
  std::vector<std::uint32_t> query_group;
  /// Ranked characteristic label set per latent group.
  std::vector<std::vector<LabelId>> group_labels;
};

/// Generates a dataset whose label structure follows geometric groups.
/// Throws ConfigError for an invalid config (e.g. clusters > n_labels).
SyntheticDataset synth_dataset(const SyntheticConfig& cfg);

}  // namespace sidx
