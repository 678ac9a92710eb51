#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sidx/dataset.hpp"

namespace sidx {

// FVEC: "SIDX" | u32 version=1 | u8 kind=1 | u64 n | u32 d | n*d f32, all LE.
FeatureSet read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureSet& features);

// LBL: "SIDX" | u32 version=1 | u8 kind=2 | u64 n | u32 n_labels |
//      per row: u16 k, then k x (u32 label, f32 confidence).
// Rows are re-sorted into canonical order on load.
LabelMatrix read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelMatrix& labels);

// GT: one line per query "<query_id>: <id> <id> ...", optional junk lines
// "<query_id>!: <id> ...". Blank lines and lines starting with '#' are
// skipped. Duplicate ids are dropped with a warning.
GroundTruth parse_ground_truth(std::istream& in);
GroundTruth read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);

}  // namespace sidx
