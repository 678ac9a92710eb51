#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sidx/dataset.hpp"
#include "sidx/kmeans.hpp"
#include "sidx/pq.hpp"
#include "sidx/residual.hpp"
#include "sidx/semantic_index.hpp"

namespace sidx {

struct ScoredItem {
  ItemId id = 0;
  double score = 0.0;  // squared L2 distance or cosine similarity

  bool operator==(const ScoredItem&) const = default;
};

/// Ascending by L2 distance or descending by cosine; ties by ascending id;
/// no duplicate ids.
struct Ranking {
  Metric metric = Metric::l2;
  std::vector<ScoredItem> items;

  std::vector<ItemId> ids() const;
};

/// Whether `a` ranks before `b` under `metric`.
bool ranks_before(Metric metric, const ScoredItem& a, const ScoredItem& b);

/// Sorts `items` into ranking order and keeps the first R (R >= size keeps all).
/// Items must already be duplicate-free.
Ranking make_ranking(std::vector<ScoredItem> items, std::size_t R, Metric metric);

/// Exact score of one vector pair.
double exact_score(Metric metric, std::span<const float> q, std::span<const float> x);

/// Exact metric over all items. R > n returns n items.
Ranking exhaustive_search(const FeatureSet& db, std::span<const float> query, std::size_t R,
                          Metric metric);

/// Exact metric over the given candidate ids.
Ranking rank_candidates(const FeatureSet& db, std::span<const ItemId> candidates,
                        std::span<const float> query, std::size_t R, Metric metric);

// --- IVF baseline ---------------------------------------------------------

struct IvfIndex {
  Centroids coarse;
  std::vector<std::vector<ItemId>> lists;  // one per coarse cell, ascending

  std::size_t k() const noexcept { return lists.size(); }
};

IvfIndex ivf_build(const FeatureSet& db, std::size_t k_coarse, std::uint64_t seed);

/// Coarse cells probed for a query; nprobe > k is clamped with a warning.
std::vector<std::size_t> ivf_probe(const IvfIndex& index, std::span<const float> query,
                                   std::size_t nprobe);

/// Union of the probed lists, ascending.
std::vector<ItemId> ivf_candidates(const IvfIndex& index, std::span<const float> query,
                                   std::size_t nprobe);

Ranking ivf_search(const IvfIndex& index, const FeatureSet& db, std::span<const float> query,
                   std::size_t nprobe, std::size_t R, Metric metric);

// --- PQ baselines ---------------------------------------------------------

/// Non-residual PQ codes for every database item.
struct FlatPQStore {
  PQCodebook codebook;
  std::size_t n = 0;
  std::vector<std::uint8_t> codes;       // n x M
  std::vector<double> reconstruction_sq;  // ||decode(code_i)||^2, for cosine

  std::span<const std::uint8_t> code(std::size_t i) const {
    return {codes.data() + i * codebook.M(), codebook.M()};
  }
};

FlatPQStore build_flat_pq(const FeatureSet& db, const PQTrainParams& params);

/// ADC over all codes: L2 uses squared-distance tables, cosine uses
/// inner-product tables and stored reconstruction norms.
Ranking flat_adc_search(const FlatPQStore& store, std::span<const float> query, std::size_t R,
                        Metric metric);

/// IVF lists with residual codes against each item's coarse centroid.
struct IvfAdcIndex {
  IvfIndex ivf;
  ResidualPQStore store;
};

IvfAdcIndex ivf_adc_build(const FeatureSet& db, std::size_t k_coarse, const PQTrainParams& pq,
                          std::uint64_t seed);

Ranking ivf_adc_search(const IvfAdcIndex& index, std::span<const float> query,
                       std::size_t nprobe, std::size_t R, Metric metric);

// --- Semantic strategies --------------------------------------------------

/// Scores every entry of the given lists with residual ADC; an item present
/// in several lists keeps its best score. `keep` optionally restricts each
/// list to a sorted id subset (same order as `lists`).
Ranking score_residual_lists(const ResidualPQStore& store, std::span<const float> query,
                             std::span<const std::size_t> lists,
                             const std::vector<std::vector<ItemId>>* keep, std::size_t R,
                             Metric metric);

/// Candidate list (pruned when tau is given) ranked by the exact metric.
Ranking semantic_search(const SemanticIndex& index, const FeatureSet& db,
                        std::span<const float> query_vec, LabelRow query_row, std::size_t beta,
                        std::size_t R, Metric metric, std::optional<double> tau = std::nullopt);

/// Candidate list scored from residual codes; needs no database vectors.
/// Throws ConfigError if the store does not match the index lists.
Ranking semantic_adc_search(const SemanticIndex& index, const ResidualPQStore& store,
                            std::span<const float> query_vec, LabelRow query_row,
                            std::size_t beta, std::size_t R, Metric metric,
                            std::optional<double> tau = std::nullopt);

}  // namespace sidx
