#include "sidx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace sidx {

FeatureSet::FeatureSet(std::size_t d) : d_(d) {
  if (d == 0) throw ConfigError("feature dimension must be >= 1");
}

FeatureSet::FeatureSet(std::size_t n, std::size_t d, std::vector<float> data)
    : n_(n), d_(d), data_(std::move(data)) {
  if (d == 0) throw ConfigError("feature dimension must be >= 1");
  if (data_.size() != n * d) {
    throw ConfigError("feature data holds " + std::to_string(data_.size()) +
                      " floats, expected " + std::to_string(n * d));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ConfigError("non-finite feature value in row " + std::to_string(i / d));
    }
  }
}

void sort_label_row(std::vector<LabelScore>& row) {
  std::sort(row.begin(), row.end(), [](const LabelScore& a, const LabelScore& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.label < b.label;
  });
}

LabelMatrix::LabelMatrix(std::size_t n_labels, std::vector<std::vector<LabelScore>> rows)
    : n_labels_(n_labels), rows_(std::move(rows)) {
  std::vector<std::size_t> seen(n_labels, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& e : rows_[i]) {
      if (e.label >= n_labels) {
        throw ConfigError("row " + std::to_string(i) + ": label " + std::to_string(e.label) +
                          " >= n_labels " + std::to_string(n_labels));
      }
      if (!(e.confidence >= 0.0f && e.confidence <= 1.0f)) {
        throw ConfigError("row " + std::to_string(i) + ": confidence outside [0,1]");
      }
      if (seen[e.label] == i) {
        throw ConfigError("row " + std::to_string(i) + ": duplicate label " +
                          std::to_string(e.label));
      }
      seen[e.label] = i;
    }
    sort_label_row(rows_[i]);
  }
}

std::size_t LabelMatrix::min_row_length() const noexcept {
  if (rows_.empty()) return 0;
  std::size_t m = rows_.front().size();
  for (const auto& r : rows_) m = std::min(m, r.size());
  return m;
}

namespace {

void validate(const SyntheticConfig& cfg) {
  if (cfg.d == 0) throw ConfigError("synth: d must be >= 1");
  if (cfg.clusters == 0) throw ConfigError("synth: clusters must be >= 1");
  if (cfg.n_labels < kGroupLabelCount) {
    throw ConfigError("synth: n_labels must be >= " + std::to_string(kGroupLabelCount));
  }
  if (cfg.clusters > cfg.n_labels) {
    throw ConfigError("synth: clusters (" + std::to_string(cfg.clusters) +
                      ") exceeds n_labels (" + std::to_string(cfg.n_labels) + ")");
  }
  if (!(cfg.label_noise >= 0.0 && cfg.label_noise <= 1.0)) {
    throw ConfigError("synth: label_noise must lie in [0,1]");
  }
  if (cfg.n_db < cfg.clusters) {
    throw ConfigError("synth: n_db must be >= clusters so every group is populated");
  }
  if (cfg.top_k < kGroupLabelCount) {
    throw ConfigError("synth: top_k must be >= " + std::to_string(kGroupLabelCount));
  }
  if (!(cfg.center_spread > 0.0) || !(cfg.size_skew >= 0.0)) {
    throw ConfigError("synth: center_spread must be > 0 and size_skew >= 0");
  }
}

class RowSampler {
 public:
  RowSampler(const SyntheticConfig& cfg, std::mt19937_64& rng)
      : n_labels_(cfg.n_labels),
        top_k_(std::min(cfg.top_k, cfg.n_labels)),
        noise_(cfg.label_noise),
        rng_(rng),
        pool_(cfg.n_labels) {}

  std::vector<LabelScore> sample(const std::vector<LabelId>& group_set) {
    std::bernoulli_distribution swap_coin(0.5);
    std::bernoulli_distribution corrupt(noise_);
    std::uniform_int_distribution<std::size_t> adjacent(0, kGroupLabelCount - 2);

    std::vector<LabelId> head(group_set.begin(), group_set.begin() + kGroupLabelCount);
    if (swap_coin(rng_)) {
      const std::size_t s = adjacent(rng_);
      std::swap(head[s], head[s + 1]);
    }

    // Slots marked as corrupted are filled with uniformly drawn labels that
    // are not already in the row; the tail is drawn the same way.
    std::vector<bool> kept(kGroupLabelCount);
    for (std::size_t s = 0; s < kGroupLabelCount; ++s) kept[s] = !corrupt(rng_);

    std::iota(pool_.begin(), pool_.end(), LabelId{0});
    std::size_t pool_size = n_labels_;
    auto remove_from_pool = [&](LabelId l) {
      auto it = std::find(pool_.begin(), pool_.begin() + pool_size, l);
      std::iter_swap(it, pool_.begin() + pool_size - 1);
      --pool_size;
    };
    auto draw = [&]() {
      std::uniform_int_distribution<std::size_t> pick(0, pool_size - 1);
      const std::size_t p = pick(rng_);
      const LabelId l = pool_[p];
      std::swap(pool_[p], pool_[pool_size - 1]);
      --pool_size;
      return l;
    };
    for (std::size_t s = 0; s < kGroupLabelCount; ++s) {
      if (kept[s]) remove_from_pool(head[s]);
    }

    std::vector<LabelScore> row(top_k_);
    for (std::size_t s = 0; s < kGroupLabelCount; ++s) {
      row[s].label = kept[s] ? head[s] : draw();
    }
    for (std::size_t s = kGroupLabelCount; s < top_k_; ++s) row[s].label = draw();

    // Strictly decreasing weights; steep over the head, shallow over the tail
    // so dense rows stay well above float underflow.
    std::uniform_real_distribution<double> head_ratio(0.5, 0.9);
    std::uniform_real_distribution<double> tail_ratio(0.97, 0.99);
    std::vector<double> w(top_k_);
    w[0] = 1.0;
    for (std::size_t s = 1; s < top_k_; ++s) {
      w[s] = w[s - 1] * (s < kGroupLabelCount ? head_ratio(rng_) : tail_ratio(rng_));
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t s = 0; s < top_k_; ++s) {
      row[s].confidence = static_cast<float>(w[s] / total);
    }
    return row;
  }

 private:
  std::size_t n_labels_;
  std::size_t top_k_;
  double noise_;
  std::mt19937_64& rng_;
  std::vector<LabelId> pool_;
};

}  // namespace

SyntheticDataset synth_dataset(const SyntheticConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(derive_seed(cfg.seed, "synth"));
  const std::size_t groups = cfg.clusters;

  // Labels are shuffled, cut into blocks of kGroupLabelCount, and each group
  // takes one block in its own rotation so groups sharing a block differ in
  // their top-1 label.
  std::vector<LabelId> perm(cfg.n_labels);
  std::iota(perm.begin(), perm.end(), LabelId{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t blocks = cfg.n_labels / kGroupLabelCount;
  std::vector<std::vector<LabelId>> group_labels(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t b = g % blocks;
    const std::size_t rot = (g / blocks) % kGroupLabelCount;
    for (std::size_t s = 0; s < kGroupLabelCount; ++s) {
      group_labels[g].push_back(perm[b * kGroupLabelCount + (s + rot) % kGroupLabelCount]);
    }
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> centers(groups * cfg.d);
  for (auto& c : centers) c = cfg.center_spread * gauss(rng);

  std::vector<double> weights(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    weights[g] = 1.0 / std::pow(static_cast<double>(g + 1), cfg.size_skew);
  }
  std::discrete_distribution<std::uint32_t> group_dist(weights.begin(), weights.end());

  SyntheticDataset out;
  out.group_labels = group_labels;
  out.db_group.resize(cfg.n_db);
  for (std::size_t i = 0; i < cfg.n_db; ++i) {
    out.db_group[i] = i < groups ? static_cast<std::uint32_t>(i) : group_dist(rng);
  }
  std::shuffle(out.db_group.begin(), out.db_group.end(), rng);
  std::uniform_int_distribution<std::uint32_t> uniform_group(
      0, static_cast<std::uint32_t>(groups - 1));
  out.query_group.resize(cfg.n_queries);
  for (auto& g : out.query_group) g = uniform_group(rng);

  auto make_features = [&](const std::vector<std::uint32_t>& group_of) {
    std::vector<float> data(group_of.size() * cfg.d);
    for (std::size_t i = 0; i < group_of.size(); ++i) {
      const double* c = centers.data() + group_of[i] * cfg.d;
      for (std::size_t j = 0; j < cfg.d; ++j) {
        data[i * cfg.d + j] = static_cast<float>(c[j] + gauss(rng));
      }
    }
    return FeatureSet(group_of.size(), cfg.d, std::move(data));
  };
  out.db = make_features(out.db_group);
  out.queries = make_features(out.query_group);

  RowSampler sampler(cfg, rng);
  auto make_labels = [&](const std::vector<std::uint32_t>& group_of) {
    std::vector<std::vector<LabelScore>> rows(group_of.size());
    for (std::size_t i = 0; i < group_of.size(); ++i) {
      rows[i] = sampler.sample(group_labels[group_of[i]]);
    }
    return LabelMatrix(cfg.n_labels, std::move(rows));
  };
  out.db_labels = make_labels(out.db_group);
  out.query_labels = make_labels(out.query_group);

  std::vector<std::vector<ItemId>> members(groups);
  for (std::size_t i = 0; i < cfg.n_db; ++i) members[out.db_group[i]].push_back(i);
  for (std::size_t q = 0; q < cfg.n_queries; ++q) {
    GroundTruthEntry e;
    e.query_id = q;
    e.relevant = members[out.query_group[q]];
    out.ground_truth.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace sidx
