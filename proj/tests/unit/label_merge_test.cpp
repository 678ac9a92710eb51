#include <cmath>
#include <map>
#include <set>

#include "sidx/label_merge.hpp"
#include "test_util.hpp"

namespace sidx {
namespace {

double naive_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  const double cov = sab - sa * sb / n;
  const double va = saa - sa * sa / n, vb = sbb - sb * sb / n;
  if (va <= 1e-12 || vb <= 1e-12) return 0.0;
  return cov / std::sqrt(va * vb);
}

CooccurrenceMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CooccurrenceMatrix c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) c.at(i, j) = c.at(j, i) = rng() % 1000000;
  }
  return c;
}

TEST(Cooccurrence, CountsPairs) {
  const LabelMatrix l(6, {{{0, 0.5f}, {2, 0.3f}, {4, 0.1f}},
                          {{2, 0.6f}, {0, 0.3f}, {5, 0.05f}},
                          {{1, 0.9f}, {3, 0.05f}, {4, 0.01f}}});
  const auto c = cooccurrence_matrix(l, 2);
  EXPECT_EQ(c.at(0, 2), 2u);
  EXPECT_EQ(c.at(2, 0), 2u);
  EXPECT_EQ(c.at(0, 0), 2u);
  EXPECT_EQ(c.at(1, 3), 1u);
  EXPECT_EQ(c.at(0, 4), 0u);  // label 4 is outside the top 2
  EXPECT_EQ(c.at(4, 4), 0u);
  EXPECT_THROW(cooccurrence_matrix(l, 4), ConfigError);
}

TEST(Cooccurrence, SymmetricDominantDiagonalAndTrace) {
  const auto l = test::dense_labels(300, 20, 1);
  const auto c = cooccurrence_matrix(l, 5);
  std::uint64_t trace = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    trace += c.at(i, i);
    for (std::size_t j = 0; j < 20; ++j) {
      EXPECT_EQ(c.at(i, j), c.at(j, i));
      EXPECT_GE(c.at(i, i), c.at(i, j));
    }
  }
  EXPECT_EQ(trace, 300u * 5);
}

TEST(Similarity, Examples) {
  const std::vector<double> up{1, 2, 3}, down{3, 2, 1}, flat{4, 4, 4};
  EXPECT_NEAR(pearson(up, down), -1.0, 1e-12);
  EXPECT_NEAR(pearson(up, up), 1.0, 1e-12);
  EXPECT_EQ(pearson(up, flat), 0.0);
  EXPECT_EQ(pearson(flat, flat), 0.0);
  EXPECT_THROW(pearson(up, std::vector<double>{1, 2}), ConfigError);

  const CooccurrenceMatrix c(3, {1, 2, 3, 3, 2, 1, 5, 5, 5});
  EXPECT_NEAR(label_similarity(c, 0, 1), -1.0, 1e-12);
  EXPECT_NEAR(label_similarity(c, 0, 0), 1.0, 1e-12);
  EXPECT_EQ(label_similarity(c, 0, 2), 0.0);
}

TEST(Similarity, MatchesNaiveFormula) {
  const auto c = random_symmetric(15, 2);
  const auto s = similarity_matrix(c);
  for (std::size_t i = 0; i < 15; ++i) {
    for (std::size_t j = 0; j < 15; ++j) {
      const auto ri = c.row(i), rj = c.row(j);
      const double want = naive_pearson({ri.begin(), ri.end()}, {rj.begin(), rj.end()});
      EXPECT_NEAR(s[i * 15 + j], want, 1e-9);
      EXPECT_NEAR(label_similarity(c, i, j), want, 1e-9);
      EXPECT_EQ(s[i * 15 + j], s[j * 15 + i]);
    }
  }
}

TEST(Merge, TargetBounds) {
  const auto c = random_symmetric(6, 3);
  EXPECT_EQ(merge_labels(c, 6), LabelMapping::identity(6));
  const auto one = merge_labels(c, 1);
  EXPECT_EQ(one.n_cells, 1u);
  for (auto cell : one.cell_of) EXPECT_EQ(cell, 0u);
  EXPECT_THROW(merge_labels(c, 0), ConfigError);
  EXPECT_THROW(merge_labels(c, 7), ConfigError);
}

// Average linkage recomputed from scratch at every step: cluster distance is
// the mean pairwise 1 - r over members.
std::vector<std::set<std::size_t>> naive_average_linkage(const CooccurrenceMatrix& c,
                                                         std::size_t target) {
  const std::size_t n = c.n_labels();
  const auto s = similarity_matrix(c);
  std::vector<std::set<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
  while (clusters.size() > target) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double sum = 0;
        for (auto i : clusters[a]) {
          for (auto j : clusters[b]) sum += 1.0 - s[i * n + j];
        }
        const double d = sum / static_cast<double>(clusters[a].size() * clusters[b].size());
        if (d < best) {
          best = d;
          ba = a;
          bb = b;
        }
      }
    }
    clusters[ba].insert(clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  return clusters;
}

TEST(Merge, AgreesWithNaiveAverageLinkage) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = random_symmetric(14, 100 + seed);
    for (std::size_t target : {2u, 5u, 9u}) {
      const auto m = merge_labels(c, target);
      ASSERT_EQ(m.n_cells, target);
      m.validate();
      std::map<std::uint32_t, std::set<std::size_t>> got;
      for (std::size_t l = 0; l < 14; ++l) got[m.cell_of[l]].insert(l);
      std::set<std::set<std::size_t>> a, b;
      for (auto& [_, s] : got) a.insert(s);
      for (auto& s : naive_average_linkage(c, target)) b.insert(s);
      EXPECT_EQ(a, b) << "seed " << seed << " target " << target;
      // Cells are numbered by their smallest label.
      std::uint32_t prev = 0;
      for (auto& [cell, s] : got) {
        if (cell > 0) EXPECT_GT(*s.begin(), prev);
        prev = static_cast<std::uint32_t>(*s.begin());
      }
    }
  }
}

TEST(Merge, ThousandLabelsTo581Cells) {
  SyntheticConfig cfg;
  cfg.n_db = 5000;
  cfg.n_queries = 1;
  cfg.d = 4;
  cfg.n_labels = 1000;
  cfg.clusters = 200;
  const auto ds = synth_dataset(cfg);
  const auto c = cooccurrence_matrix(ds.db_labels);
  const auto m = merge_labels(c, 581);
  EXPECT_EQ(m.n_cells, 581u);
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(merge_labels(c, 581), m);
}

}  // namespace
}  // namespace sidx
