#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sidx/common.hpp"

namespace sidx {

// `relevant` and `junk` are sorted ascending; rankings are item ids in rank
// order.

/// Ranking with junk ids removed.
std::vector<ItemId> strip_junk(std::span<const ItemId> ranking, std::span<const ItemId> junk);

/// Uninterpolated average precision over the ranking after junk removal:
/// (1/|relevant|) * sum over relevant hits at rank k of (hits so far / k).
/// Throws ConfigError for an empty relevant set.
double average_precision(std::span<const ItemId> ranking, std::span<const ItemId> relevant,
                         std::span<const ItemId> junk = {});

/// |top-R ∩ relevant| / |relevant|; a ranking shorter than R counts its
/// missing tail as non-relevant.
double recall_at(std::span<const ItemId> ranking, std::span<const ItemId> relevant, std::size_t R);

/// Number of relevant ids inside the first R ranks.
std::size_t hits_at(std::span<const ItemId> ranking, std::span<const ItemId> relevant,
                    std::size_t R);

/// Fraction of relevant ids present in the (sorted) candidate list.
double candidate_recall(std::span<const ItemId> candidates, std::span<const ItemId> relevant);
std::size_t candidate_hits(std::span<const ItemId> candidates, std::span<const ItemId> relevant);

/// |candidates| / n.
double scope_ratio(std::size_t n_candidates, std::size_t n);

}  // namespace sidx
