#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sidx/kmeans.hpp"
#include "sidx/matrix.hpp"

namespace sidx {

/// One code index per subspace. Codebooks are limited to 2^8 codewords so a
/// code is exactly M bytes.
using PQCode = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kMaxPQBits = 8;

/// M sub-codebooks of 2^k_bits codewords each over consecutive d/M-dim slices.
class PQCodebook {
 public:
  PQCodebook() = default;
  /// Throws ConfigError unless d % M == 0 and 1 <= k_bits <= 8.
  PQCodebook(std::size_t d, std::size_t M, std::uint32_t k_bits, std::vector<float> codewords);

  std::size_t d() const noexcept { return d_; }
  std::size_t M() const noexcept { return M_; }
  std::uint32_t k_bits() const noexcept { return k_bits_; }
  std::size_t ksub() const noexcept { return std::size_t{1} << k_bits_; }
  std::size_t dsub() const noexcept { return d_ / M_; }

  std::span<const float> codeword(std::size_t m, std::size_t j) const {
    return {codewords_.data() + (m * ksub() + j) * dsub(), dsub()};
  }
  std::span<const float> codewords() const noexcept { return codewords_; }

  bool operator==(const PQCodebook&) const = default;

 private:
  std::size_t d_ = 0;
  std::size_t M_ = 0;
  std::uint32_t k_bits_ = 0;
  std::vector<float> codewords_;  // M x 2^K x dsub
};

struct PQTrainParams {
  std::size_t M = 8;
  std::uint32_t k_bits = 8;
  std::uint64_t seed = 0;
  std::size_t max_iters = 25;
  /// Training uses at most this many points (a seeded sample); 0 = all.
  std::size_t max_train_points = 0;
};

/// Independent k-means per subspace. Throws ConfigError if d % M != 0.
PQCodebook train_pq(MatrixView points, const PQTrainParams& params);

/// Nearest codeword per subspace (ties to the lowest index).
PQCode encode(const PQCodebook& codebook, std::span<const float> x);
void encode_into(const PQCodebook& codebook, std::span<const float> x, std::span<std::uint8_t> out);

/// Batch encoder producing the same codes as encode(). Holds scratch space,
/// so one instance must not be shared between threads.
class PQEncoder {
 public:
  explicit PQEncoder(const PQCodebook& codebook);
  void encode_into(std::span<const float> x, std::span<std::uint8_t> out);

 private:
  std::size_t d_;
  std::size_t dsub_;
  std::vector<CentroidScanner> subspaces_;
  std::vector<double> scratch_;
};

std::vector<float> decode(const PQCodebook& codebook, std::span<const std::uint8_t> code);

/// Per-query lookup table, M x 2^K.
class ADCTables {
 public:
  enum class Kind { squared_l2, inner_product };

  ADCTables(Kind kind, std::size_t M, std::size_t ksub);

  Kind kind() const noexcept { return kind_; }
  std::size_t M() const noexcept { return M_; }
  std::size_t ksub() const noexcept { return ksub_; }
  float at(std::size_t m, std::size_t j) const { return table_[m * ksub_ + j]; }
  float& at(std::size_t m, std::size_t j) { return table_[m * ksub_ + j]; }

  /// Sum over subspaces of table[m][code[m]].
  double lookup(std::span<const std::uint8_t> code) const {
    double s = 0.0;
    const float* t = table_.data();
    for (std::size_t m = 0; m < M_; ++m, t += ksub_) s += t[code[m]];
    return s;
  }

 private:
  Kind kind_;
  std::size_t M_;
  std::size_t ksub_;
  std::vector<float> table_;
};

/// table[m][j] = ||q_m - r^m_j||^2.
ADCTables adc_tables(const PQCodebook& codebook, std::span<const float> query);
/// table[m][j] = <q_m, r^m_j>.
ADCTables inner_product_tables(const PQCodebook& codebook, std::span<const float> query);

/// Asymmetric distance sum_m ||q_m - r^m_{code_m}||^2 from squared-L2 tables.
double adc_distance(const ADCTables& tables, std::span<const std::uint8_t> code);

}  // namespace sidx
