#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sidx/dataset.hpp"
#include "sidx/semantic_index.hpp"

namespace sidx {

/// t[i][j]: number of rows whose top-k labels contain both i and j;
/// t[i][i]: number of rows whose top-k contains i.
class CooccurrenceMatrix {
 public:
  CooccurrenceMatrix() = default;
  explicit CooccurrenceMatrix(std::size_t n_labels)
      : n_(n_labels), counts_(n_labels * n_labels, 0) {}
  /// Raw counts, row-major n x n.
  CooccurrenceMatrix(std::size_t n_labels, std::vector<std::uint64_t> counts);

  std::size_t n_labels() const noexcept { return n_; }
  std::uint64_t at(std::size_t i, std::size_t j) const { return counts_[i * n_ + j]; }
  std::uint64_t& at(std::size_t i, std::size_t j) { return counts_[i * n_ + j]; }
  std::span<const std::uint64_t> row(std::size_t i) const { return {counts_.data() + i * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> counts_;
};

CooccurrenceMatrix cooccurrence_matrix(const LabelMatrix& labels, std::size_t k = 5);

/// Pearson correlation of two equally sized sequences; 0 when either has zero
/// variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of rows i and j of the co-occurrence matrix.
double label_similarity(const CooccurrenceMatrix& c, std::size_t i, std::size_t j);

/// Full similarity matrix, row-major n x n.
std::vector<double> similarity_matrix(const CooccurrenceMatrix& c);

/// Average-linkage agglomerative clustering on 1 - similarity, stopped at
/// `target_cells` clusters. Among equally close cluster pairs the
/// lexicographically smallest is merged first (clusters are named by their
/// smallest label). Cells are numbered by their smallest label.
LabelMapping merge_labels(const CooccurrenceMatrix& c, std::size_t target_cells);

}  // namespace sidx
