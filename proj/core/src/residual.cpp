#include "sidx/residual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sidx {

Centroids partition_centroid(MatrixView members) {
  if (members.n() == 0) throw ConfigError("partition centroid of an empty partition");
  std::vector<double> sum(members.d, 0.0);
  for (std::size_t i = 0; i < members.n(); ++i) {
    const auto x = members.row(i);
    for (std::size_t t = 0; t < members.d; ++t) sum[t] += x[t];
  }
  Centroids c(1, members.d);
  auto row = c.row(0);
  for (std::size_t t = 0; t < members.d; ++t) {
    row[t] = static_cast<float>(sum[t] / static_cast<double>(members.n()));
  }
  return c;
}

PartitionCentroids partition_centroids(const std::vector<std::vector<ItemId>>& lists,
                                       MatrixView db) {
  PartitionCentroids out{Centroids(lists.size(), db.d), std::vector<bool>(lists.size(), false)};
  std::vector<double> sum(db.d);
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (lists[i].empty()) {
      out.empty[i] = true;
      continue;
    }
    std::fill(sum.begin(), sum.end(), 0.0);
    for (ItemId id : lists[i]) {
      const auto x = db.row(id);
      for (std::size_t t = 0; t < db.d; ++t) sum[t] += x[t];
    }
    auto row = out.centroids.row(i);
    for (std::size_t t = 0; t < db.d; ++t) {
      row[t] = static_cast<float>(sum[t] / static_cast<double>(lists[i].size()));
    }
  }
  return out;
}

PQCode encode_residual(std::span<const float> centroid, const PQCodebook& codebook,
                       std::span<const float> x) {
  if (centroid.size() != x.size() || x.size() != codebook.d()) {
    throw ConfigError("residual encode: dimension mismatch");
  }
  std::vector<float> r(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) r[t] = x[t] - centroid[t];
  return encode(codebook, r);
}

ResidualNormTable::ResidualNormTable(std::size_t n_parts, std::size_t M, std::size_t ksub)
    : n_parts_(n_parts), M_(M), ksub_(ksub), table_(n_parts * M * ksub, 0.0f) {}

ResidualNormTable residual_norm_table(const Centroids& centroids, const PQCodebook& codebook) {
  if (centroids.d() != codebook.d()) throw ConfigError("norm table: dimension mismatch");
  ResidualNormTable t(centroids.k(), codebook.M(), codebook.ksub());
  const std::size_t dsub = codebook.dsub();
  for (std::size_t i = 0; i < centroids.k(); ++i) {
    const auto c = centroids.row(i);
    for (std::size_t m = 0; m < codebook.M(); ++m) {
      for (std::size_t j = 0; j < codebook.ksub(); ++j) {
        const auto r = codebook.codeword(m, j);
        double s = 0.0;
        for (std::size_t u = 0; u < dsub; ++u) {
          const double v = static_cast<double>(c[m * dsub + u]) + r[u];
          s += v * v;
        }
        t.at(i, m, j) = static_cast<float>(s);
      }
    }
  }
  return t;
}

ResidualQueryTables::ResidualQueryTables(const PQCodebook& codebook, const Centroids& centroids,
                                         const ResidualNormTable& norms,
                                         std::span<const float> query,
                                         std::span<const std::size_t> partitions)
    : norms_(&norms),
      ip_(inner_product_tables(codebook, query)),
      q_norm_sq_(squared_norm(query)),
      q_dot_c_(centroids.k(), std::numeric_limits<double>::quiet_NaN()) {
  for (std::size_t p : partitions) {
    if (p >= centroids.k()) throw ConfigError("query tables: partition out of range");
    q_dot_c_[p] = dot(query, centroids.row(p));
  }
}

bool ResidualQueryTables::prepared(std::size_t partition) const {
  return partition < q_dot_c_.size() && !std::isnan(q_dot_c_[partition]);
}

double ResidualQueryTables::q_dot_c(std::size_t partition) const {
  if (!prepared(partition)) {
    throw ConfigError("query tables not prepared for partition " + std::to_string(partition));
  }
  return q_dot_c_[partition];
}

double ResidualQueryTables::l2(std::size_t partition, std::span<const std::uint8_t> code) const {
  const double qc = q_dot_c(partition);
  return q_norm_sq_ - 2.0 * qc - 2.0 * ip_.lookup(code) + norms_->norm_sq(partition, code);
}

double ResidualQueryTables::cosine(std::size_t partition,
                                   std::span<const std::uint8_t> code) const {
  const double qc = q_dot_c(partition);
  const double xn = norms_->norm_sq(partition, code);
  if (q_norm_sq_ <= 0.0 || xn <= 0.0) return -std::numeric_limits<double>::infinity();
  return (qc + ip_.lookup(code)) / (std::sqrt(q_norm_sq_) * std::sqrt(xn));
}

ResidualPQStore build_residual_store(const std::vector<std::vector<ItemId>>& lists,
                                     MatrixView db, const PQTrainParams& params) {
  auto pc = partition_centroids(lists, db);
  auto store = build_residual_store(lists, pc.centroids, db, params);
  store.empty = std::move(pc.empty);
  return store;
}

ResidualPQStore build_residual_store(const std::vector<std::vector<ItemId>>& lists,
                                     const Centroids& centroids, MatrixView db,
                                     const PQTrainParams& params) {
  if (centroids.k() != lists.size() || centroids.d() != db.d) {
    throw ConfigError("residual store: centroid shape does not match lists");
  }
  // Enumerate (list, position) pairs and sample the training set before
  // materialising residuals.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::size_t l = 0; l < lists.size(); ++l) {
    for (std::size_t p = 0; p < lists[l].size(); ++p) {
      pairs.emplace_back(static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(p));
    }
  }
  if (pairs.empty()) throw ConfigError("residual store: all lists are empty");
  if (params.max_train_points != 0 && pairs.size() > params.max_train_points) {
    std::mt19937_64 rng(derive_seed(params.seed, "residual-sample"));
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(params.max_train_points);
    std::sort(pairs.begin(), pairs.end());
  }
  const std::size_t d = db.d;
  std::vector<float> residuals(pairs.size() * d);
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    const auto [l, p] = pairs[s];
    const auto x = db.row(lists[l][p]);
    const auto c = centroids.row(l);
    for (std::size_t t = 0; t < d; ++t) residuals[s * d + t] = x[t] - c[t];
  }
  PQTrainParams train = params;
  train.max_train_points = 0;
  PQCodebook codebook = train_pq(MatrixView{residuals, d}, train);

  std::vector<std::vector<std::uint8_t>> codes(lists.size());
  std::vector<float> r(d);
  PQEncoder encoder(codebook);
  for (std::size_t l = 0; l < lists.size(); ++l) {
    codes[l].resize(lists[l].size() * codebook.M());
    const auto c = centroids.row(l);
    for (std::size_t p = 0; p < lists[l].size(); ++p) {
      const auto x = db.row(lists[l][p]);
      for (std::size_t t = 0; t < d; ++t) r[t] = x[t] - c[t];
      encoder.encode_into(r, std::span(codes[l].data() + p * codebook.M(), codebook.M()));
    }
  }
  return assemble_residual_store(std::move(codebook), centroids, lists, std::move(codes));
}

ResidualPQStore assemble_residual_store(PQCodebook codebook, Centroids centroids,
                                        std::vector<std::vector<ItemId>> ids,
                                        std::vector<std::vector<std::uint8_t>> codes) {
  if (centroids.k() != ids.size() || codes.size() != ids.size() ||
      centroids.d() != codebook.d()) {
    throw ConfigError("residual store: inconsistent shapes");
  }
  ResidualPQStore s;
  s.empty.resize(ids.size());
  for (std::size_t l = 0; l < ids.size(); ++l) {
    if (codes[l].size() != ids[l].size() * codebook.M()) {
      throw ConfigError("residual store: code count mismatch in list " + std::to_string(l));
    }
    s.empty[l] = ids[l].empty();
  }
  s.norms = residual_norm_table(centroids, codebook);
  s.codebook = std::move(codebook);
  s.centroids = std::move(centroids);
  s.ids = std::move(ids);
  s.codes = std::move(codes);
  return s;
}

}  // namespace sidx
