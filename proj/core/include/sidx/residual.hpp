#pragma once

// Residual product quantization against per-partition centroids:
//   x ~ c^i + [r_1, ..., r_M]
// with query-side scoring decomposed as
//   ||q - x||^2 ~ ||q||^2 - 2<q,c^i> - 2 sum_m <q_m,r_m> + sum_m ||c^i_m + r_m||^2
//   cos(q, x)   ~ (<q,c^i> + sum_m <q_m,r_m>) / (||q|| sqrt(sum_m ||c^i_m + r_m||^2))
// The last term does not depend on the query and is tabulated once.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sidx/common.hpp"
#include "sidx/kmeans.hpp"
#include "sidx/pq.hpp"

namespace sidx {

/// Arithmetic mean of the member rows (k = 1). Throws ConfigError if empty.
Centroids partition_centroid(MatrixView members);

struct PartitionCentroids {
  Centroids centroids;      // one row per list; zero for empty lists
  std::vector<bool> empty;  // flagged empty lists, skipped in scoring
};

PartitionCentroids partition_centroids(const std::vector<std::vector<ItemId>>& lists,
                                       MatrixView db);

/// encode(codebook, x - centroid).
PQCode encode_residual(std::span<const float> centroid, const PQCodebook& codebook,
                       std::span<const float> x);

/// entry[i][m][j] = ||c^i_m + r^m_j||^2.
class ResidualNormTable {
 public:
  ResidualNormTable() = default;
  ResidualNormTable(std::size_t n_parts, std::size_t M, std::size_t ksub);

  std::size_t n_parts() const noexcept { return n_parts_; }
  float at(std::size_t i, std::size_t m, std::size_t j) const {
    return table_[(i * M_ + m) * ksub_ + j];
  }
  float& at(std::size_t i, std::size_t m, std::size_t j) { return table_[(i * M_ + m) * ksub_ + j]; }

  /// ||c^i + decode(code)||^2 as the sum of per-subspace entries.
  double norm_sq(std::size_t i, std::span<const std::uint8_t> code) const {
    const float* t = table_.data() + i * M_ * ksub_;
    double s = 0.0;
    for (std::size_t m = 0; m < M_; ++m, t += ksub_) s += t[code[m]];
    return s;
  }

 private:
  std::size_t n_parts_ = 0;
  std::size_t M_ = 0;
  std::size_t ksub_ = 0;
  std::vector<float> table_;
};

ResidualNormTable residual_norm_table(const Centroids& centroids, const PQCodebook& codebook);

/// Query-local tables for scoring residual codes: ||q||^2, <q, c^i> for the
/// prepared partitions, and the inner-product tables <q_m, r^m_j>.
class ResidualQueryTables {
 public:
  ResidualQueryTables(const PQCodebook& codebook, const Centroids& centroids,
                      const ResidualNormTable& norms, std::span<const float> query,
                      std::span<const std::size_t> partitions);

  bool prepared(std::size_t partition) const;
  double query_norm_sq() const noexcept { return q_norm_sq_; }

  /// Throws ConfigError when `partition` was not prepared.
  double l2(std::size_t partition, std::span<const std::uint8_t> code) const;
  /// -inf when the query or the reconstruction has zero norm.
  double cosine(std::size_t partition, std::span<const std::uint8_t> code) const;

 private:
  double q_dot_c(std::size_t partition) const;

  const ResidualNormTable* norms_;
  ADCTables ip_;
  double q_norm_sq_ = 0.0;
  std::vector<double> q_dot_c_;  // NaN for partitions not prepared
};

inline double semantic_adc_l2(const ResidualQueryTables& tables, std::size_t partition,
                              std::span<const std::uint8_t> code) {
  return tables.l2(partition, code);
}

inline double semantic_adc_cosine(const ResidualQueryTables& tables, std::size_t partition,
                                  std::span<const std::uint8_t> code) {
  return tables.cosine(partition, code);
}

/// Residual codes for a set of lists (semantic partitions or IVF cells). Each
/// list entry is encoded against its own list's centroid.
struct ResidualPQStore {
  PQCodebook codebook;
  Centroids centroids;
  std::vector<bool> empty;
  std::vector<std::vector<ItemId>> ids;          // per list, ascending
  std::vector<std::vector<std::uint8_t>> codes;  // per list, ids.size() x M
  ResidualNormTable norms;                       // derived from codebook + centroids

  std::size_t n_lists() const noexcept { return ids.size(); }
  std::span<const std::uint8_t> code(std::size_t list, std::size_t pos) const {
    return {codes[list].data() + pos * codebook.M(), codebook.M()};
  }

  bool operator==(const ResidualPQStore& o) const {
    return codebook == o.codebook && centroids == o.centroids && empty == o.empty &&
           ids == o.ids && codes == o.codes;
  }
};

/// Computes list centroids, trains one codebook on residuals pooled over all
/// (list, item) pairs, and encodes every entry.
ResidualPQStore build_residual_store(const std::vector<std::vector<ItemId>>& lists,
                                     MatrixView db, const PQTrainParams& params);

/// Same, with externally supplied centroids (e.g. IVF coarse centroids).
ResidualPQStore build_residual_store(const std::vector<std::vector<ItemId>>& lists,
                                     const Centroids& centroids, MatrixView db,
                                     const PQTrainParams& params);

/// Assembles a store from persisted parts and recomputes the norm table.
ResidualPQStore assemble_residual_store(PQCodebook codebook, Centroids centroids,
                                        std::vector<std::vector<ItemId>> ids,
                                        std::vector<std::vector<std::uint8_t>> codes);

}  // namespace sidx
