#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidx/dataset.hpp"
#include "sidx/residual.hpp"
#include "sidx/search.hpp"
#include "sidx/semantic_index.hpp"

namespace sidx {

enum class Strategy { exhaustive, ivf, ivf_adc, adc, semantic, semantic_adc };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct StrategyConfig {
  Strategy strategy = Strategy::semantic;
  Metric metric = Metric::l2;
  std::size_t alpha = 5;
  std::size_t beta = 5;
  std::optional<double> tau;  // prune split partitions
  std::size_t L = 0;          // 0: no split
  std::size_t merge_cells = 0;  // 0: no merge
  std::size_t pq_m = 8;
  std::uint32_t pq_k = 8;
  std::size_t pq_train_points = 16384;  // 0: train on everything
  std::size_t k_coarse = 0;             // 0: one coarse cell per label
  std::size_t nprobe = 5;
  std::vector<std::size_t> recall_ranks{1, 10, 100};
  std::uint64_t seed = 0;
};

struct SearchResult {
  Ranking ranking;
  std::vector<ItemId> candidates;  // ascending
};

/// One retrieval strategy behind a uniform query interface.
class RetrievalEngine {
 public:
  virtual ~RetrievalEngine() = default;
  /// `R` caps the ranking length; the candidate list is always complete.
  virtual SearchResult search(std::span<const float> query, LabelRow query_row,
                              std::size_t R) const = 0;
  virtual std::size_t n_items() const = 0;
  /// Whether queries need label rows.
  virtual bool uses_labels() const { return false; }
};

/// A semantic index as assembled from a label file: optional merge, split and
/// residual PQ block, built in that order.
struct SemanticBuild {
  SemanticIndex index;
  std::optional<ResidualPQStore> pq;
};

/// Derived seeds: "merge" is unused, "split" seeds sub-cell k-means and "pq"
/// seeds codebook training.
SemanticBuild build_semantic(const StrategyConfig& cfg, const LabelMatrix& db_labels,
                             const FeatureSet* db, bool with_pq);

/// Database-side inputs; everything referenced must outlive the engine.
struct EngineInputs {
  const FeatureSet* db = nullptr;
  const LabelMatrix* db_labels = nullptr;
  /// Prebuilt semantic index (e.g. loaded from disk); built from db_labels
  /// when absent.
  const SemanticIndex* index = nullptr;
  const ResidualPQStore* pq = nullptr;
};

/// Throws ConfigError when an input required by the strategy is missing.
std::unique_ptr<RetrievalEngine> make_engine(const StrategyConfig& cfg, const EngineInputs& in);

struct QueryMetrics {
  ItemId query_id = 0;
  double ap = 0.0;
  double candidate_recall = 0.0;
  double scope_ratio = 0.0;
  std::vector<double> recall_at;  // aligned with recall_ranks
};

struct MetricsReport {
  StrategyConfig config;
  std::size_t n_db = 0;
  std::size_t n_queries = 0;
  double map = 0.0;
  double recall_candidates = 0.0;         // per-query mean
  double recall_candidates_pooled = 0.0;  // sum hits / sum relevant
  double scope_ratio = 0.0;
  std::vector<std::size_t> recall_ranks;
  std::vector<double> r_at;         // per-query mean
  std::vector<double> r_at_pooled;  // pooled
  double wall_time_s = 0.0;
  std::vector<QueryMetrics> per_query;
};

/// Runs every ground-truth query (in query-id order) through the engine and
/// averages per-query metrics. Wall time covers the search calls only.
/// Throws ConfigError when the ground truth references unknown queries or
/// items, or when the engine needs labels and none are given.
MetricsReport evaluate(const RetrievalEngine& engine, const StrategyConfig& cfg,
                       const FeatureSet& queries, const LabelMatrix* query_labels,
                       const GroundTruth& gt);

/// Stable key order.
nlohmann::ordered_json to_json(const MetricsReport& report);
std::string csv_header(const std::vector<std::size_t>& recall_ranks);
std::string csv_row(const MetricsReport& report);

}  // namespace sidx
