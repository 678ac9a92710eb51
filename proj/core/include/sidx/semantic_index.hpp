#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sidx/dataset.hpp"
#include "sidx/kmeans.hpp"

namespace sidx {

struct IndexParams {
  std::size_t alpha = 5;  // fusion parameter: labels each item is stored under
  std::size_t n_labels = 0;
  bool operator==(const IndexParams&) const = default;
};

/// Many-to-one map from label ids onto merged cells.
struct LabelMapping {
  std::size_t n_cells = 0;
  std::vector<std::uint32_t> cell_of;  // indexed by label id

  std::size_t n_labels() const noexcept { return cell_of.size(); }
  static LabelMapping identity(std::size_t n_labels);
  /// Throws ConfigError unless every cell id is < n_cells and each is used.
  void validate() const;

  bool operator==(const LabelMapping&) const = default;
};

/// Sub-cells of one partition produced by k-means.
struct SubCells {
  Centroids centroids;                   // n_sub x d
  std::vector<std::vector<ItemId>> ids;  // n_sub lists, ascending

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t nonempty() const noexcept;

  bool operator==(const SubCells&) const = default;
};

struct SplitStructure {
  std::size_t L = 0;
  std::size_t d = 0;
  std::vector<SubCells> partitions;  // one per posting list

  bool operator==(const SplitStructure&) const = default;
};

/// Label-partitioned inverted index. Posting list i holds every item whose
/// top-alpha labels contain label i (or, with a mapping, a label of cell i).
class SemanticIndex {
 public:
  SemanticIndex() = default;
  SemanticIndex(IndexParams params, std::size_t n_items, std::vector<std::vector<ItemId>> lists,
                std::optional<LabelMapping> mapping, std::optional<SplitStructure> split);

  const IndexParams& params() const noexcept { return params_; }
  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t n_lists() const noexcept { return lists_.size(); }
  const std::vector<ItemId>& list(std::size_t i) const { return lists_[i]; }
  const std::vector<std::vector<ItemId>>& lists() const noexcept { return lists_; }
  const std::optional<LabelMapping>& mapping() const noexcept { return mapping_; }
  const std::optional<SplitStructure>& split() const noexcept { return split_; }

  /// Cell holding `label` (identity without a mapping).
  std::size_t cell_of(LabelId label) const {
    return mapping_ ? mapping_->cell_of[label] : label;
  }

  /// Sum of posting-list lengths.
  std::size_t total_postings() const noexcept;

  SemanticIndex with_split(SplitStructure split) const;

  bool operator==(const SemanticIndex&) const = default;

 private:
  IndexParams params_;
  std::size_t n_items_ = 0;
  std::vector<std::vector<ItemId>> lists_;
  std::optional<LabelMapping> mapping_;
  std::optional<SplitStructure> split_;
};

struct CandidateList {
  std::vector<ItemId> ids;                // ascending, unique
  std::vector<std::size_t> source_cells;  // reclaimed cells in label-rank order, unique
};

/// The k highest-confidence labels of a canonical row (ties by label id).
/// Throws ConfigError if the row stores fewer than k entries.
std::vector<LabelId> top_labels(LabelRow row, std::size_t k);

/// Throws ConfigError if alpha is 0 or exceeds n_labels, a row is too short,
/// or the mapping does not cover the label vocabulary.
SemanticIndex build_index(const LabelMatrix& db_labels, const IndexParams& params,
                          const std::optional<LabelMapping>& mapping = std::nullopt);

/// Cells reclaimed by the query's top-beta labels, deduplicated in rank order.
std::vector<std::size_t> reclaimed_cells(const SemanticIndex& index, LabelRow query_row,
                                         std::size_t beta);

/// Union of the posting lists of the query's top-beta labels.
CandidateList candidate_list(const SemanticIndex& index, LabelRow query_row, std::size_t beta);

/// Splits every posting list into at most L sub-cells with k-means. Partition
/// p uses seed derive_seed(seed, p).
SemanticIndex split_index(const SemanticIndex& index, const FeatureSet& features, std::size_t L,
                          std::uint64_t seed);

/// Number of sub-cells kept out of `nonempty`: ceil(tau * nonempty), at least 1.
std::size_t kept_subcells(double tau, std::size_t nonempty);

/// Within each reclaimed partition keeps the ceil(tau * L_nonempty) sub-cells
/// whose centroids are nearest to the query. Throws ConfigError without a
/// split structure or for tau outside (0, 1].
CandidateList pruned_candidate_list(const SemanticIndex& index, std::span<const float> query_vec,
                                    LabelRow query_row, std::size_t beta, double tau);

/// Per reclaimed cell, the ids kept after pruning (ascending). Used by the
/// compressed search path to filter codes.
std::vector<std::pair<std::size_t, std::vector<ItemId>>> pruned_cells(
    const SemanticIndex& index, std::span<const float> query_vec, LabelRow query_row,
    std::size_t beta, double tau);

}  // namespace sidx
