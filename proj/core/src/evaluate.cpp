#include "sidx/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sidx/label_merge.hpp"
#include "sidx/metrics.hpp"

namespace sidx {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::exhaustive: return "exhaustive";
    case Strategy::ivf: return "ivf";
    case Strategy::ivf_adc: return "ivf-adc";
    case Strategy::adc: return "adc";
    case Strategy::semantic: return "semantic";
    case Strategy::semantic_adc: return "semantic-adc";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  for (auto st : {Strategy::exhaustive, Strategy::ivf, Strategy::ivf_adc, Strategy::adc,
                  Strategy::semantic, Strategy::semantic_adc}) {
    if (s == to_string(st)) return st;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

namespace {

PQTrainParams pq_params(const StrategyConfig& cfg) {
  PQTrainParams p;
  p.M = cfg.pq_m;
  p.k_bits = cfg.pq_k;
  p.seed = derive_seed(cfg.seed, "pq");
  p.max_train_points = cfg.pq_train_points;
  return p;
}

std::vector<ItemId> all_ids(std::size_t n) {
  std::vector<ItemId> ids(n);
  std::iota(ids.begin(), ids.end(), ItemId{0});
  return ids;
}

class ExhaustiveEngine final : public RetrievalEngine {
 public:
  explicit ExhaustiveEngine(const FeatureSet& db) : db_(db), all_(all_ids(db.n())) {}
  SearchResult search(std::span<const float> q, LabelRow, std::size_t R) const override {
    return {exhaustive_search(db_, q, R, metric), all_};
  }
  std::size_t n_items() const override { return db_.n(); }
  Metric metric = Metric::l2;

 private:
  const FeatureSet& db_;
  std::vector<ItemId> all_;
};

class IvfEngine final : public RetrievalEngine {
 public:
  IvfEngine(const FeatureSet& db, IvfIndex index, std::size_t nprobe, Metric metric)
      : db_(db), index_(std::move(index)), nprobe_(nprobe), metric_(metric) {}
  SearchResult search(std::span<const float> q, LabelRow, std::size_t R) const override {
    auto cands = ivf_candidates(index_, q, nprobe_);
    auto ranking = rank_candidates(db_, cands, q, R, metric_);
    return {std::move(ranking), std::move(cands)};
  }
  std::size_t n_items() const override { return db_.n(); }

 private:
  const FeatureSet& db_;
  IvfIndex index_;
  std::size_t nprobe_;
  Metric metric_;
};

class IvfAdcEngine final : public RetrievalEngine {
 public:
  IvfAdcEngine(IvfAdcIndex index, std::size_t n, std::size_t nprobe, Metric metric)
      : index_(std::move(index)), n_(n), nprobe_(nprobe), metric_(metric) {}
  SearchResult search(std::span<const float> q, LabelRow, std::size_t R) const override {
    return {ivf_adc_search(index_, q, nprobe_, R, metric_), ivf_candidates(index_.ivf, q, nprobe_)};
  }
  std::size_t n_items() const override { return n_; }

 private:
  IvfAdcIndex index_;
  std::size_t n_;
  std::size_t nprobe_;
  Metric metric_;
};

class FlatAdcEngine final : public RetrievalEngine {
 public:
  FlatAdcEngine(FlatPQStore store, Metric metric)
      : store_(std::move(store)), metric_(metric), all_(all_ids(store_.n)) {}
  SearchResult search(std::span<const float> q, LabelRow, std::size_t R) const override {
    return {flat_adc_search(store_, q, R, metric_), all_};
  }
  std::size_t n_items() const override { return store_.n; }

 private:
  FlatPQStore store_;
  Metric metric_;
  std::vector<ItemId> all_;
};

// Holds either a borrowed or an owned semantic index.
class SemanticEngineBase : public RetrievalEngine {
 public:
  SemanticEngineBase(const StrategyConfig& cfg, const EngineInputs& in, bool needs_pq) : cfg_(cfg) {
    if (in.index) {
      index_ = in.index;
      pq_ = in.pq;
    } else {
      if (!in.db_labels) throw ConfigError("semantic strategies need database labels or an index");
      owned_ = build_semantic(cfg, *in.db_labels, in.db, needs_pq);
      index_ = &owned_->index;
      pq_ = owned_->pq ? &*owned_->pq : nullptr;
    }
    if (cfg.tau && !index_->split()) {
      throw ConfigError("tau given but the index has no split structure (set L or run split)");
    }
    if (needs_pq && !pq_) throw ConfigError("semantic-adc needs an index with a PQ block");
  }
  bool uses_labels() const override { return true; }
  std::size_t n_items() const override { return index_->n_items(); }

 protected:
  CandidateList candidates(std::span<const float> q, LabelRow row) const {
    return cfg_.tau ? pruned_candidate_list(*index_, q, row, cfg_.beta, *cfg_.tau)
                    : candidate_list(*index_, row, cfg_.beta);
  }

  StrategyConfig cfg_;
  const SemanticIndex* index_ = nullptr;
  const ResidualPQStore* pq_ = nullptr;
  std::optional<SemanticBuild> owned_;
};

class SemanticEngine final : public SemanticEngineBase {
 public:
  SemanticEngine(const StrategyConfig& cfg, const EngineInputs& in)
      : SemanticEngineBase(cfg, in, false), db_(in.db) {
    if (!db_) throw ConfigError("semantic strategy needs database features");
    if (db_->n() < index_->n_items()) throw ConfigError("features do not cover the index");
  }
  SearchResult search(std::span<const float> q, LabelRow row, std::size_t R) const override {
    auto cands = candidates(q, row);
    auto ranking = rank_candidates(*db_, cands.ids, q, R, cfg_.metric);
    return {std::move(ranking), std::move(cands.ids)};
  }

 private:
  const FeatureSet* db_;
};

class SemanticAdcEngine final : public SemanticEngineBase {
 public:
  SemanticAdcEngine(const StrategyConfig& cfg, const EngineInputs& in)
      : SemanticEngineBase(cfg, in, true) {}
  SearchResult search(std::span<const float> q, LabelRow row, std::size_t R) const override {
    auto ranking = semantic_adc_search(*index_, *pq_, q, row, cfg_.beta, R, cfg_.metric, cfg_.tau);
    return {std::move(ranking), candidates(q, row).ids};
  }
};

}  // namespace

SemanticBuild build_semantic(const StrategyConfig& cfg, const LabelMatrix& db_labels,
                             const FeatureSet* db, bool with_pq) {
  IndexParams params{cfg.alpha, db_labels.n_labels()};
  std::optional<LabelMapping> mapping;
  if (cfg.merge_cells != 0) {
    mapping = merge_labels(cooccurrence_matrix(db_labels), cfg.merge_cells);
  }
  SemanticBuild out{build_index(db_labels, params, mapping), std::nullopt};
  if (cfg.L != 0) {
    if (!db) throw ConfigError("splitting needs database features");
    out.index = split_index(out.index, *db, cfg.L, derive_seed(cfg.seed, "split"));
  }
  if (with_pq) {
    if (!db) throw ConfigError("the PQ block needs database features");
    out.pq = build_residual_store(out.index.lists(), db->view(), pq_params(cfg));
  }
  return out;
}

std::unique_ptr<RetrievalEngine> make_engine(const StrategyConfig& cfg, const EngineInputs& in) {
  auto need_db = [&]() -> const FeatureSet& {
    if (!in.db) {
      throw ConfigError("strategy " + std::string(to_string(cfg.strategy)) +
                        " needs database features");
    }
    return *in.db;
  };
  auto coarse_k = [&](const FeatureSet& db) {
    std::size_t k = cfg.k_coarse;
    if (k == 0) k = in.db_labels ? in.db_labels->n_labels() : 1000;
    return std::min(k, db.n());
  };
  switch (cfg.strategy) {
    case Strategy::exhaustive: {
      auto e = std::make_unique<ExhaustiveEngine>(need_db());
      e->metric = cfg.metric;
      return e;
    }
    case Strategy::ivf: {
      const auto& db = need_db();
      return std::make_unique<IvfEngine>(
          db, ivf_build(db, coarse_k(db), derive_seed(cfg.seed, "kmeans")), cfg.nprobe,
          cfg.metric);
    }
    case Strategy::ivf_adc: {
      const auto& db = need_db();
      return std::make_unique<IvfAdcEngine>(
          ivf_adc_build(db, coarse_k(db), pq_params(cfg), derive_seed(cfg.seed, "kmeans")),
          db.n(), cfg.nprobe, cfg.metric);
    }
    case Strategy::adc:
      return std::make_unique<FlatAdcEngine>(build_flat_pq(need_db(), pq_params(cfg)), cfg.metric);
    case Strategy::semantic:
      return std::make_unique<SemanticEngine>(cfg, in);
    case Strategy::semantic_adc:
      return std::make_unique<SemanticAdcEngine>(cfg, in);
  }
  throw ConfigError("unknown strategy");
}

MetricsReport evaluate(const RetrievalEngine& engine, const StrategyConfig& cfg,
                       const FeatureSet& queries, const LabelMatrix* query_labels,
                       const GroundTruth& gt) {
  if (engine.uses_labels()) {
    if (!query_labels) throw ConfigError("strategy needs query labels");
    if (query_labels->n() != queries.n()) {
      throw ConfigError("query labels hold " + std::to_string(query_labels->n()) +
                        " rows for " + std::to_string(queries.n()) + " queries");
    }
  }
  const std::size_t n_db = engine.n_items();
  std::vector<const GroundTruthEntry*> entries;
  for (const auto& e : gt.entries) {
    if (e.query_id >= queries.n()) {
      throw ConfigError("ground truth references query " + std::to_string(e.query_id) +
                        " but only " + std::to_string(queries.n()) + " queries are loaded");
    }
    if (e.relevant.empty()) throw ConfigError("empty relevant set in ground truth");
    if (e.relevant.back() >= n_db) {
      throw ConfigError("ground truth of query " + std::to_string(e.query_id) +
                        " references item " + std::to_string(e.relevant.back()) +
                        " outside the database");
    }
    entries.push_back(&e);
  }
  std::sort(entries.begin(), entries.end(),
            [](auto* a, auto* b) { return a->query_id < b->query_id; });
  if (std::adjacent_find(entries.begin(), entries.end(), [](auto* a, auto* b) {
        return a->query_id == b->query_id;
      }) != entries.end()) {
    throw ConfigError("duplicate query id in ground truth");
  }
  if (entries.empty()) throw ConfigError("ground truth is empty");

  MetricsReport rep;
  rep.config = cfg;
  rep.n_db = n_db;
  rep.n_queries = entries.size();
  rep.recall_ranks = cfg.recall_ranks;
  std::sort(rep.recall_ranks.begin(), rep.recall_ranks.end());
  rep.recall_ranks.erase(std::unique(rep.recall_ranks.begin(), rep.recall_ranks.end()),
                         rep.recall_ranks.end());
  const std::size_t n_ranks = rep.recall_ranks.size();

  std::vector<std::size_t> pooled_hits(n_ranks, 0);
  std::size_t pooled_relevant = 0, pooled_cand_hits = 0;
  double elapsed = 0.0;
  for (const auto* e : entries) {
    const auto q = queries.row(e->query_id);
    const LabelRow row = query_labels ? query_labels->row(e->query_id) : LabelRow{};
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = engine.search(q, row, n_db);
    elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto ranked = strip_junk(res.ranking.ids(), e->junk);
    QueryMetrics m;
    m.query_id = e->query_id;
    m.ap = average_precision(ranked, e->relevant);
    const std::size_t chits = candidate_hits(res.candidates, e->relevant);
    m.candidate_recall = static_cast<double>(chits) / static_cast<double>(e->relevant.size());
    m.scope_ratio = scope_ratio(res.candidates.size(), n_db);
    for (std::size_t k = 0; k < n_ranks; ++k) {
      const std::size_t h = hits_at(ranked, e->relevant, rep.recall_ranks[k]);
      pooled_hits[k] += h;
      m.recall_at.push_back(static_cast<double>(h) / static_cast<double>(e->relevant.size()));
    }
    pooled_relevant += e->relevant.size();
    pooled_cand_hits += chits;
    rep.per_query.push_back(std::move(m));
  }

  const double nq = static_cast<double>(rep.n_queries);
  rep.r_at.assign(n_ranks, 0.0);
  for (const auto& m : rep.per_query) {
    rep.map += m.ap;
    rep.recall_candidates += m.candidate_recall;
    rep.scope_ratio += m.scope_ratio;
    for (std::size_t k = 0; k < n_ranks; ++k) rep.r_at[k] += m.recall_at[k];
  }
  rep.map /= nq;
  rep.recall_candidates /= nq;
  rep.scope_ratio /= nq;
  for (auto& v : rep.r_at) v /= nq;
  rep.recall_candidates_pooled =
      static_cast<double>(pooled_cand_hits) / static_cast<double>(pooled_relevant);
  for (std::size_t k = 0; k < n_ranks; ++k) {
    rep.r_at_pooled.push_back(static_cast<double>(pooled_hits[k]) /
                              static_cast<double>(pooled_relevant));
  }
  rep.wall_time_s = elapsed;
  return rep;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  const auto& c = r.config;
  j["strategy"] = to_string(c.strategy);
  j["metric"] = to_string(c.metric);
  j["n_db"] = r.n_db;
  j["n_queries"] = r.n_queries;
  j["map"] = r.map;
  j["recall_candidates"] = r.recall_candidates;
  j["recall_candidates_pooled"] = r.recall_candidates_pooled;
  nlohmann::ordered_json rat, ratp;
  for (std::size_t k = 0; k < r.recall_ranks.size(); ++k) {
    rat[std::to_string(r.recall_ranks[k])] = r.r_at[k];
    ratp[std::to_string(r.recall_ranks[k])] = r.r_at_pooled[k];
  }
  j["r_at"] = rat;
  j["r_at_pooled"] = ratp;
  j["scope_ratio"] = r.scope_ratio;
  j["wall_time_s"] = r.wall_time_s;
  nlohmann::ordered_json cfg;
  cfg["alpha"] = c.alpha;
  cfg["beta"] = c.beta;
  cfg["tau"] = c.tau ? nlohmann::ordered_json(*c.tau) : nlohmann::ordered_json(nullptr);
  cfg["L"] = c.L;
  cfg["merge_cells"] = c.merge_cells;
  cfg["M"] = c.pq_m;
  cfg["K"] = c.pq_k;
  cfg["k_coarse"] = c.k_coarse;
  cfg["nprobe"] = c.nprobe;
  cfg["seed"] = c.seed;
  j["config"] = cfg;
  return j;
}

std::string csv_header(const std::vector<std::size_t>& recall_ranks) {
  std::string h =
      "strategy,metric,alpha,beta,tau,L,merge_cells,M,K,k_coarse,nprobe,seed,n_db,n_queries,map,"
      "recall_candidates,recall_candidates_pooled,scope_ratio";
  for (auto R : recall_ranks) h += ",r_at_" + std::to_string(R);
  h += ",wall_time_s";
  return h;
}

std::string csv_row(const MetricsReport& r) {
  const auto& c = r.config;
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  std::ostringstream s;
  s << to_string(c.strategy) << ',' << to_string(c.metric) << ',' << c.alpha << ',' << c.beta
    << ',' << (c.tau ? num(*c.tau) : std::string()) << ',' << c.L << ',' << c.merge_cells << ','
    << c.pq_m << ',' << c.pq_k << ',' << c.k_coarse << ',' << c.nprobe << ',' << c.seed << ','
    << r.n_db << ',' << r.n_queries << ',' << num(r.map) << ',' << num(r.recall_candidates) << ','
    << num(r.recall_candidates_pooled) << ',' << num(r.scope_ratio);
  for (double v : r.r_at) s << ',' << num(v);
  s << ',' << num(r.wall_time_s);
  return s.str();
}

}  // namespace sidx
