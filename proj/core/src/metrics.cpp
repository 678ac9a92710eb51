#include "sidx/metrics.hpp"

#include <algorithm>

namespace sidx {

namespace {

bool contains(std::span<const ItemId> sorted, ItemId id) {
  return std::binary_search(sorted.begin(), sorted.end(), id);
}

}  // namespace

std::vector<ItemId> strip_junk(std::span<const ItemId> ranking, std::span<const ItemId> junk) {
  std::vector<ItemId> out;
  out.reserve(ranking.size());
  for (ItemId id : ranking) {
    if (!contains(junk, id)) out.push_back(id);
  }
  return out;
}

double average_precision(std::span<const ItemId> ranking, std::span<const ItemId> relevant,
                         std::span<const ItemId> junk) {
  if (relevant.empty()) throw ConfigError("average precision needs a non-empty relevant set");
  double sum = 0.0;
  std::size_t hits = 0;
  std::size_t rank = 0;
  for (ItemId id : ranking) {
    if (contains(junk, id)) continue;
    ++rank;
    if (contains(relevant, id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

std::size_t hits_at(std::span<const ItemId> ranking, std::span<const ItemId> relevant,
                    std::size_t R) {
  const std::size_t limit = std::min(R, ranking.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < limit; ++i) hits += contains(relevant, ranking[i]) ? 1 : 0;
  return hits;
}

double recall_at(std::span<const ItemId> ranking, std::span<const ItemId> relevant,
                 std::size_t R) {
  if (relevant.empty()) return 0.0;
  return static_cast<double>(hits_at(ranking, relevant, R)) /
         static_cast<double>(relevant.size());
}

std::size_t candidate_hits(std::span<const ItemId> candidates, std::span<const ItemId> relevant) {
  std::size_t hits = 0;
  for (ItemId id : relevant) hits += contains(candidates, id) ? 1 : 0;
  return hits;
}

double candidate_recall(std::span<const ItemId> candidates, std::span<const ItemId> relevant) {
  if (relevant.empty()) return 0.0;
  return static_cast<double>(candidate_hits(candidates, relevant)) /
         static_cast<double>(relevant.size());
}

double scope_ratio(std::size_t n_candidates, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(n_candidates) / static_cast<double>(n);
}

}  // namespace sidx
