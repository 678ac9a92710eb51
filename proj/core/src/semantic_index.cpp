#include "sidx/semantic_index.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sidx {

LabelMapping LabelMapping::identity(std::size_t n_labels) {
  LabelMapping m;
  m.n_cells = n_labels;
  m.cell_of.resize(n_labels);
  for (std::size_t i = 0; i < n_labels; ++i) m.cell_of[i] = static_cast<std::uint32_t>(i);
  return m;
}

void LabelMapping::validate() const {
  std::vector<bool> used(n_cells, false);
  for (auto c : cell_of) {
    if (c >= n_cells) throw ConfigError("label mapping: cell id out of range");
    used[c] = true;
  }
  if (std::find(used.begin(), used.end(), false) != used.end()) {
    throw ConfigError("label mapping is not surjective");
  }
}

std::size_t SubCells::nonempty() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(ids.begin(), ids.end(), [](const auto& l) { return !l.empty(); }));
}

SemanticIndex::SemanticIndex(IndexParams params, std::size_t n_items,
                             std::vector<std::vector<ItemId>> lists,
                             std::optional<LabelMapping> mapping,
                             std::optional<SplitStructure> split)
    : params_(params),
      n_items_(n_items),
      lists_(std::move(lists)),
      mapping_(std::move(mapping)),
      split_(std::move(split)) {
  if (mapping_) {
    mapping_->validate();
    if (mapping_->n_labels() != params_.n_labels || mapping_->n_cells != lists_.size()) {
      throw ConfigError("semantic index: mapping does not match index shape");
    }
  } else if (lists_.size() != params_.n_labels) {
    throw ConfigError("semantic index: expected one posting list per label");
  }
  if (split_ && split_->partitions.size() != lists_.size()) {
    throw ConfigError("semantic index: split structure does not match posting lists");
  }
}

std::size_t SemanticIndex::total_postings() const noexcept {
  std::size_t s = 0;
  for (const auto& l : lists_) s += l.size();
  return s;
}

SemanticIndex SemanticIndex::with_split(SplitStructure split) const {
  return SemanticIndex(params_, n_items_, lists_, mapping_, std::move(split));
}

std::vector<LabelId> top_labels(LabelRow row, std::size_t k) {
  if (k > row.size()) {
    throw ConfigError("need the top " + std::to_string(k) + " labels but the row stores only " +
                      std::to_string(row.size()) +
                      "; regenerate the label file with a larger top-k");
  }
  auto before = [](const LabelScore& a, const LabelScore& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.label < b.label;
  };
  std::vector<LabelId> out(k);
  if (std::is_sorted(row.begin(), row.end(), before)) {
    for (std::size_t i = 0; i < k; ++i) out[i] = row[i].label;
    return out;
  }
  std::vector<LabelScore> copy(row.begin(), row.end());
  std::partial_sort(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(k), copy.end(),
                    before);
  for (std::size_t i = 0; i < k; ++i) out[i] = copy[i].label;
  return out;
}

SemanticIndex build_index(const LabelMatrix& db_labels, const IndexParams& params,
                          const std::optional<LabelMapping>& mapping) {
  if (params.n_labels != db_labels.n_labels()) {
    throw ConfigError("index n_labels (" + std::to_string(params.n_labels) +
                      ") does not match the label file (" +
                      std::to_string(db_labels.n_labels()) + ")");
  }
  if (params.alpha == 0 || params.alpha > params.n_labels) {
    throw ConfigError("alpha must lie in [1, n_labels=" + std::to_string(params.n_labels) +
                      "], got " + std::to_string(params.alpha));
  }
  if (mapping && mapping->n_labels() != params.n_labels) {
    throw ConfigError("label mapping covers " + std::to_string(mapping->n_labels()) +
                      " labels, expected " + std::to_string(params.n_labels));
  }
  const std::size_t n_lists = mapping ? mapping->n_cells : params.n_labels;
  std::vector<std::vector<ItemId>> lists(n_lists);
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < db_labels.n(); ++i) {
    cells.clear();
    for (LabelId l : top_labels(db_labels.row(i), params.alpha)) {
      cells.push_back(mapping ? mapping->cell_of[l] : l);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    for (std::size_t c : cells) lists[c].push_back(i);
  }
  return SemanticIndex(params, db_labels.n(), std::move(lists), mapping, std::nullopt);
}

std::vector<std::size_t> reclaimed_cells(const SemanticIndex& index, LabelRow query_row,
                                         std::size_t beta) {
  if (beta == 0 || beta > index.params().n_labels) {
    throw ConfigError("beta must lie in [1, n_labels=" +
                      std::to_string(index.params().n_labels) + "], got " +
                      std::to_string(beta));
  }
  std::vector<std::size_t> cells;
  for (LabelId l : top_labels(query_row, beta)) {
    if (l >= index.params().n_labels) throw ConfigError("query label out of range");
    const std::size_t c = index.cell_of(l);
    if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
  }
  return cells;
}

namespace {

std::vector<ItemId> sorted_union(std::vector<ItemId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

CandidateList candidate_list(const SemanticIndex& index, LabelRow query_row, std::size_t beta) {
  CandidateList out;
  out.source_cells = reclaimed_cells(index, query_row, beta);
  std::vector<ItemId> ids;
  for (std::size_t c : out.source_cells) {
    const auto& l = index.list(c);
    ids.insert(ids.end(), l.begin(), l.end());
  }
  out.ids = sorted_union(std::move(ids));
  return out;
}

SemanticIndex split_index(const SemanticIndex& index, const FeatureSet& features, std::size_t L,
                          std::uint64_t seed) {
  if (L == 0) throw ConfigError("split: L must be >= 1");
  if (features.n() < index.n_items()) {
    throw ConfigError("split: features do not cover all indexed items");
  }
  SplitStructure split;
  split.L = L;
  split.d = features.d();
  split.partitions.resize(index.n_lists());
  std::vector<float> members;
  for (std::size_t p = 0; p < index.n_lists(); ++p) {
    const auto& list = index.list(p);
    auto& sc = split.partitions[p];
    if (list.empty()) {
      sc.centroids = Centroids(0, features.d());
      continue;
    }
    members.resize(list.size() * features.d());
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto x = features.row(list[i]);
      std::copy(x.begin(), x.end(), members.begin() + i * features.d());
    }
    KMeansParams kp;
    kp.k = std::min(L, list.size());
    kp.seed = derive_seed(seed, p);
    auto km = kmeans(MatrixView{members, features.d()}, kp);
    sc.ids.resize(km.centroids.k());
    for (std::size_t i = 0; i < list.size(); ++i) sc.ids[km.assignment[i]].push_back(list[i]);
    sc.centroids = std::move(km.centroids);
  }
  return index.with_split(std::move(split));
}

std::size_t kept_subcells(double tau, std::size_t nonempty) {
  if (nonempty == 0) return 0;
  // Tolerance keeps products such as 0.3 * 10 from rounding up to 4.
  const double raw = std::ceil(tau * static_cast<double>(nonempty) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, nonempty);
}

std::vector<std::pair<std::size_t, std::vector<ItemId>>> pruned_cells(
    const SemanticIndex& index, std::span<const float> query_vec, LabelRow query_row,
    std::size_t beta, double tau) {
  if (!index.split()) throw ConfigError("pruning requires a split index (run split first)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  const auto& split = *index.split();
  if (query_vec.size() != split.d) throw ConfigError("pruning: query dimension mismatch");

  std::vector<std::pair<std::size_t, std::vector<ItemId>>> out;
  for (std::size_t c : reclaimed_cells(index, query_row, beta)) {
    const auto& sc = split.partitions[c];
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t s = 0; s < sc.size(); ++s) {
      if (!sc.ids[s].empty()) order.emplace_back(squared_l2(query_vec, sc.centroids.row(s)), s);
    }
    std::sort(order.begin(), order.end());
    const std::size_t keep = kept_subcells(tau, order.size());
    std::vector<ItemId> ids;
    for (std::size_t i = 0; i < keep; ++i) {
      const auto& l = sc.ids[order[i].second];
      ids.insert(ids.end(), l.begin(), l.end());
    }
    out.emplace_back(c, sorted_union(std::move(ids)));
  }
  return out;
}

CandidateList pruned_candidate_list(const SemanticIndex& index, std::span<const float> query_vec,
                                    LabelRow query_row, std::size_t beta, double tau) {
  CandidateList out;
  std::vector<ItemId> ids;
  for (auto& [cell, kept] : pruned_cells(index, query_vec, query_row, beta, tau)) {
    out.source_cells.push_back(cell);
    ids.insert(ids.end(), kept.begin(), kept.end());
  }
  out.ids = sorted_union(std::move(ids));
  return out;
}

}  // namespace sidx
