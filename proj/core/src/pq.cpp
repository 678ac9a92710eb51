#include "sidx/pq.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "sidx/common.hpp"
#include "sidx/kmeans.hpp"

namespace sidx {

PQCodebook::PQCodebook(std::size_t d, std::size_t M, std::uint32_t k_bits,
                       std::vector<float> codewords)
    : d_(d), M_(M), k_bits_(k_bits), codewords_(std::move(codewords)) {
  if (M == 0 || d == 0 || d % M != 0) {
    throw ConfigError("PQ: dimension " + std::to_string(d) + " is not divisible by M=" +
                      std::to_string(M));
  }
  if (k_bits == 0 || k_bits > kMaxPQBits) {
    throw ConfigError("PQ: k_bits must lie in [1, 8], got " + std::to_string(k_bits));
  }
  if (codewords_.size() != M * ksub() * dsub()) throw ConfigError("PQ: codebook size mismatch");
}

PQCodebook train_pq(MatrixView points, const PQTrainParams& params) {
  const std::size_t d = points.d;
  if (params.M == 0 || d % params.M != 0) {
    throw ConfigError("PQ: dimension " + std::to_string(d) + " is not divisible by M=" +
                      std::to_string(params.M));
  }
  if (params.k_bits == 0 || params.k_bits > kMaxPQBits) {
    throw ConfigError("PQ: k_bits must lie in [1, 8], got " + std::to_string(params.k_bits));
  }
  if (points.n() == 0) throw ConfigError("PQ: no training points");

  std::vector<std::size_t> rows(points.n());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (params.max_train_points != 0 && rows.size() > params.max_train_points) {
    std::mt19937_64 rng(derive_seed(params.seed, "pq-sample"));
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(params.max_train_points);
    std::sort(rows.begin(), rows.end());
  }

  const std::size_t M = params.M;
  const std::size_t dsub = d / M;
  const std::size_t ksub = std::size_t{1} << params.k_bits;
  std::vector<float> codewords(M * ksub * dsub);
  std::vector<float> sub(rows.size() * dsub);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto x = points.row(rows[i]);
      std::copy_n(x.begin() + m * dsub, dsub, sub.begin() + i * dsub);
    }
    KMeansParams kp;
    kp.k = ksub;
    kp.seed = derive_seed(params.seed, m);
    kp.max_iters = params.max_iters;
    const auto km = kmeans(MatrixView{sub, dsub}, kp);
    // Fewer distinct sub-vectors than codewords: pad with copies of the last
    // centroid. Encoding breaks ties to the lower index, so padding stays unused.
    float* out = codewords.data() + m * ksub * dsub;
    for (std::size_t j = 0; j < ksub; ++j) {
      const auto c = km.centroids.row(std::min(j, km.centroids.k() - 1));
      std::copy(c.begin(), c.end(), out + j * dsub);
    }
  }
  return PQCodebook(d, M, params.k_bits, std::move(codewords));
}

void encode_into(const PQCodebook& codebook, std::span<const float> x,
                 std::span<std::uint8_t> out) {
  if (x.size() != codebook.d()) {
    throw ConfigError("PQ encode: dimension " + std::to_string(x.size()) + " != " +
                      std::to_string(codebook.d()));
  }
  const std::size_t dsub = codebook.dsub();
  for (std::size_t m = 0; m < codebook.M(); ++m) {
    const auto xm = x.subspan(m * dsub, dsub);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < codebook.ksub(); ++j) {
      const double dd = squared_l2(xm, codebook.codeword(m, j));
      if (dd < best_d) {
        best_d = dd;
        best = j;
      }
    }
    out[m] = static_cast<std::uint8_t>(best);
  }
}

PQEncoder::PQEncoder(const PQCodebook& codebook) : d_(codebook.d()), dsub_(codebook.dsub()) {
  for (std::size_t m = 0; m < codebook.M(); ++m) {
    subspaces_.emplace_back(codebook.codewords().subspan(m * codebook.ksub() * dsub_),
                            codebook.ksub(), dsub_);
  }
}

void PQEncoder::encode_into(std::span<const float> x, std::span<std::uint8_t> out) {
  if (x.size() != d_) {
    throw ConfigError("PQ encode: dimension " + std::to_string(x.size()) + " != " +
                      std::to_string(d_));
  }
  for (std::size_t m = 0; m < subspaces_.size(); ++m) {
    out[m] = static_cast<std::uint8_t>(
        subspaces_[m].nearest(x.subspan(m * dsub_, dsub_), scratch_).first);
  }
}

PQCode encode(const PQCodebook& codebook, std::span<const float> x) {
  PQCode code(codebook.M());
  encode_into(codebook, x, code);
  return code;
}

std::vector<float> decode(const PQCodebook& codebook, std::span<const std::uint8_t> code) {
  if (code.size() != codebook.M()) throw ConfigError("PQ decode: code length != M");
  std::vector<float> x(codebook.d());
  for (std::size_t m = 0; m < codebook.M(); ++m) {
    const auto c = codebook.codeword(m, code[m]);
    std::copy(c.begin(), c.end(), x.begin() + m * codebook.dsub());
  }
  return x;
}

ADCTables::ADCTables(Kind kind, std::size_t M, std::size_t ksub)
    : kind_(kind), M_(M), ksub_(ksub), table_(M * ksub, 0.0f) {}

namespace {

template <typename F>
ADCTables build_tables(ADCTables::Kind kind, const PQCodebook& codebook,
                       std::span<const float> query, F&& f) {
  if (query.size() != codebook.d()) {
    throw ConfigError("ADC: query dimension " + std::to_string(query.size()) + " != " +
                      std::to_string(codebook.d()));
  }
  ADCTables t(kind, codebook.M(), codebook.ksub());
  const std::size_t dsub = codebook.dsub();
  for (std::size_t m = 0; m < codebook.M(); ++m) {
    const auto qm = query.subspan(m * dsub, dsub);
    for (std::size_t j = 0; j < codebook.ksub(); ++j) {
      t.at(m, j) = static_cast<float>(f(qm, codebook.codeword(m, j)));
    }
  }
  return t;
}

}  // namespace

ADCTables adc_tables(const PQCodebook& codebook, std::span<const float> query) {
  return build_tables(ADCTables::Kind::squared_l2, codebook, query,
                      [](auto a, auto b) { return squared_l2(a, b); });
}

ADCTables inner_product_tables(const PQCodebook& codebook, std::span<const float> query) {
  return build_tables(ADCTables::Kind::inner_product, codebook, query,
                      [](auto a, auto b) { return dot(a, b); });
}

double adc_distance(const ADCTables& tables, std::span<const std::uint8_t> code) {
  if (tables.kind() != ADCTables::Kind::squared_l2) {
    throw ConfigError("adc_distance requires squared-L2 tables");
  }
  return tables.lookup(code);
}

}  // namespace sidx
