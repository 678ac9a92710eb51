#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "sidx/residual.hpp"
#include "sidx/semantic_index.hpp"

namespace sidx {

// Index file, little-endian:
//   "SIDX" | u32 version=1 | u8 kind=3
//   u32 alpha | u32 n_labels
//   u8 has_mapping [u32 n_cells | n_labels x u32 cell]
//   per posting list (n_cells or n_labels of them): u64 len | len x u64 id
//   u8 has_split   [u32 L | u32 d | per list: u32 n_sub | n_sub*d f32 |
//                   n_sub x (u64 len | len x u64 id)]
//   u8 has_pq      [u8 kind=4 | u32 M | u32 K | u32 d | M*2^K*(d/M) f32 |
//                   per list: d f32 centroid | per list entry: u64 id | M x u8]
// The item count is recovered as max id + 1 (every item sits in >= 1 list).

struct IndexBundle {
  SemanticIndex index;
  std::optional<ResidualPQStore> pq;
};

std::vector<unsigned char> serialize_index(const SemanticIndex& index,
                                           const ResidualPQStore* pq = nullptr);
IndexBundle deserialize_index(std::vector<unsigned char> bytes);

/// Writes atomically (temp file + rename).
void save_index(const std::filesystem::path& path, const SemanticIndex& index,
                const ResidualPQStore* pq = nullptr);
IndexBundle load_index(const std::filesystem::path& path);

}  // namespace sidx
