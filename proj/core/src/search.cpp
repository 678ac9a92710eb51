#include "sidx/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sidx {

std::vector<ItemId> Ranking::ids() const {
  std::vector<ItemId> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.id);
  return out;
}

bool ranks_before(Metric metric, const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return metric == Metric::l2 ? a.score < b.score : a.score > b.score;
  return a.id < b.id;
}

Ranking make_ranking(std::vector<ScoredItem> items, std::size_t R, Metric metric) {
  auto cmp = [metric](const ScoredItem& a, const ScoredItem& b) {
    return ranks_before(metric, a, b);
  };
  if (R < items.size()) {
    std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(R), items.end(),
                      cmp);
    items.resize(R);
  } else {
    std::sort(items.begin(), items.end(), cmp);
  }
  return Ranking{metric, std::move(items)};
}

double exact_score(Metric metric, std::span<const float> q, std::span<const float> x) {
  return metric == Metric::l2 ? squared_l2(q, x) : cosine_similarity(q, x);
}

namespace {

void check_dim(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw ConfigError("query dimension " + std::to_string(got) + " != database dimension " +
                      std::to_string(expected));
  }
}

}  // namespace

Ranking exhaustive_search(const FeatureSet& db, std::span<const float> query, std::size_t R,
                          Metric metric) {
  check_dim(db.d(), query.size());
  std::vector<ScoredItem> items(db.n());
  for (std::size_t i = 0; i < db.n(); ++i) items[i] = {i, exact_score(metric, query, db.row(i))};
  return make_ranking(std::move(items), R, metric);
}

Ranking rank_candidates(const FeatureSet& db, std::span<const ItemId> candidates,
                        std::span<const float> query, std::size_t R, Metric metric) {
  check_dim(db.d(), query.size());
  std::vector<ScoredItem> items;
  items.reserve(candidates.size());
  for (ItemId id : candidates) {
    if (id >= db.n()) throw ConfigError("candidate id " + std::to_string(id) + " out of range");
    items.push_back({id, exact_score(metric, query, db.row(id))});
  }
  return make_ranking(std::move(items), R, metric);
}

IvfIndex ivf_build(const FeatureSet& db, std::size_t k_coarse, std::uint64_t seed) {
  KMeansParams kp;
  kp.k = k_coarse;
  kp.seed = seed;
  auto km = kmeans(db.view(), kp);
  IvfIndex index;
  index.lists.resize(km.centroids.k());
  for (std::size_t i = 0; i < db.n(); ++i) index.lists[km.assignment[i]].push_back(i);
  index.coarse = std::move(km.centroids);
  return index;
}

std::vector<std::size_t> ivf_probe(const IvfIndex& index, std::span<const float> query,
                                   std::size_t nprobe) {
  check_dim(index.coarse.d(), query.size());
  if (nprobe == 0) throw ConfigError("nprobe must be >= 1");
  if (nprobe > index.k()) {
    warn("nprobe " + std::to_string(nprobe) + " exceeds the " + std::to_string(index.k()) +
         " coarse cells; clamped");
    nprobe = index.k();
  }
  return nearest_centroids(index.coarse, query, nprobe);
}

std::vector<ItemId> ivf_candidates(const IvfIndex& index, std::span<const float> query,
                                   std::size_t nprobe) {
  std::vector<ItemId> ids;
  for (std::size_t c : ivf_probe(index, query, nprobe)) {
    ids.insert(ids.end(), index.lists[c].begin(), index.lists[c].end());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Ranking ivf_search(const IvfIndex& index, const FeatureSet& db, std::span<const float> query,
                   std::size_t nprobe, std::size_t R, Metric metric) {
  const auto ids = ivf_candidates(index, query, nprobe);
  return rank_candidates(db, ids, query, R, metric);
}

FlatPQStore build_flat_pq(const FeatureSet& db, const PQTrainParams& params) {
  FlatPQStore s;
  s.codebook = train_pq(db.view(), params);
  s.n = db.n();
  const std::size_t M = s.codebook.M();
  s.codes.resize(db.n() * M);
  s.reconstruction_sq.resize(db.n());
  PQEncoder encoder(s.codebook);
  for (std::size_t i = 0; i < db.n(); ++i) {
    auto code = std::span(s.codes.data() + i * M, M);
    encoder.encode_into(db.row(i), code);
    s.reconstruction_sq[i] = squared_norm(decode(s.codebook, code));
  }
  return s;
}

Ranking flat_adc_search(const FlatPQStore& store, std::span<const float> query, std::size_t R,
                        Metric metric) {
  std::vector<ScoredItem> items(store.n);
  if (metric == Metric::l2) {
    const auto t = adc_tables(store.codebook, query);
    for (std::size_t i = 0; i < store.n; ++i) items[i] = {i, adc_distance(t, store.code(i))};
  } else {
    const auto t = inner_product_tables(store.codebook, query);
    const double qn = std::sqrt(squared_norm(query));
    for (std::size_t i = 0; i < store.n; ++i) {
      const double xn = store.reconstruction_sq[i];
      const double s = (qn <= 0.0 || xn <= 0.0) ? -std::numeric_limits<double>::infinity()
                                                : t.lookup(store.code(i)) / (qn * std::sqrt(xn));
      items[i] = {i, s};
    }
  }
  return make_ranking(std::move(items), R, metric);
}

IvfAdcIndex ivf_adc_build(const FeatureSet& db, std::size_t k_coarse, const PQTrainParams& pq,
                          std::uint64_t seed) {
  IvfAdcIndex out;
  out.ivf = ivf_build(db, k_coarse, seed);
  out.store = build_residual_store(out.ivf.lists, out.ivf.coarse, db.view(), pq);
  return out;
}

Ranking score_residual_lists(const ResidualPQStore& store, std::span<const float> query,
                             std::span<const std::size_t> lists,
                             const std::vector<std::vector<ItemId>>* keep, std::size_t R,
                             Metric metric) {
  const ResidualQueryTables tables(store.codebook, store.centroids, store.norms, query, lists);
  std::vector<ScoredItem> items;
  for (std::size_t k = 0; k < lists.size(); ++k) {
    const std::size_t l = lists[k];
    if (store.empty[l]) continue;
    const auto& ids = store.ids[l];
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (keep && !std::binary_search((*keep)[k].begin(), (*keep)[k].end(), ids[p])) continue;
      const auto code = store.code(l, p);
      const double s = metric == Metric::l2 ? tables.l2(l, code) : tables.cosine(l, code);
      items.push_back({ids[p], s});
    }
  }
  // Keep the best score per item.
  std::sort(items.begin(), items.end(), [metric](const ScoredItem& a, const ScoredItem& b) {
    if (a.id != b.id) return a.id < b.id;
    return ranks_before(metric, a, b);
  });
  items.erase(std::unique(items.begin(), items.end(),
                          [](const ScoredItem& a, const ScoredItem& b) { return a.id == b.id; }),
              items.end());
  return make_ranking(std::move(items), R, metric);
}

Ranking ivf_adc_search(const IvfAdcIndex& index, std::span<const float> query,
                       std::size_t nprobe, std::size_t R, Metric metric) {
  const auto probed = ivf_probe(index.ivf, query, nprobe);
  return score_residual_lists(index.store, query, probed, nullptr, R, metric);
}

Ranking semantic_search(const SemanticIndex& index, const FeatureSet& db,
                        std::span<const float> query_vec, LabelRow query_row, std::size_t beta,
                        std::size_t R, Metric metric, std::optional<double> tau) {
  const auto cands = tau ? pruned_candidate_list(index, query_vec, query_row, beta, *tau)
                         : candidate_list(index, query_row, beta);
  return rank_candidates(db, cands.ids, query_vec, R, metric);
}

Ranking semantic_adc_search(const SemanticIndex& index, const ResidualPQStore& store,
                            std::span<const float> query_vec, LabelRow query_row,
                            std::size_t beta, std::size_t R, Metric metric,
                            std::optional<double> tau) {
  if (store.n_lists() != index.n_lists()) {
    throw ConfigError("semantic-adc: PQ block does not match the index posting lists");
  }
  if (tau) {
    std::vector<std::size_t> cells;
    std::vector<std::vector<ItemId>> keep;
    for (auto& [cell, ids] : pruned_cells(index, query_vec, query_row, beta, *tau)) {
      cells.push_back(cell);
      keep.push_back(std::move(ids));
    }
    return score_residual_lists(store, query_vec, cells, &keep, R, metric);
  }
  const auto cells = reclaimed_cells(index, query_row, beta);
  return score_residual_lists(store, query_vec, cells, nullptr, R, metric);
}

}  // namespace sidx
