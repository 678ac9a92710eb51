// sidx: synthesize data, build and persist semantic indexes, query and
// evaluate retrieval strategies.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sidx/binary.hpp"
#include "sidx/evaluate.hpp"
#include "sidx/index_io.hpp"
#include "sidx/io.hpp"
#include "sidx/label_merge.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Options {
  // Inputs and outputs.
  std::string features, labels, queries, query_labels, gt, index, out, csv;

  // Index structure.
  std::size_t alpha = 5;
  std::size_t merge_cells = 0;
  std::size_t L = 10;
  double tau = 0.1;
  bool split = false;
  bool pq = false;
  std::size_t pq_m = 8;
  std::uint32_t pq_k = 8;
  std::size_t pq_train = 16384;

  // Search.
  std::string strategy = "semantic";
  std::string metric = "l2";
  std::size_t beta = 5;
  std::size_t nprobe = 5;
  std::size_t k_coarse = 0;
  std::vector<std::size_t> R{1, 10, 100};
  std::uint64_t seed = 0;

  // Sweep axes.
  std::vector<std::size_t> alphas, betas;
  std::vector<double> taus;

  sidx::SyntheticConfig synth;

  // Whether tau / L were set on the command line or in the config file.
  bool tau_given = false;
  bool L_given = false;
};

void write_text_atomic(const fs::path& path, const std::string& text) {
  sidx::binary::write_file_atomic(
      path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

/// Sends text to `path`, or stdout when no path is given.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text << std::flush;
  } else {
    write_text_atomic(path, text);
  }
}

const std::string& require(const std::string& value, const char* flag, const char* why) {
  if (value.empty()) throw sidx::ConfigError(std::string(flag) + " is required " + why);
  return value;
}

sidx::StrategyConfig strategy_config(const Options& o) {
  sidx::StrategyConfig c;
  c.strategy = sidx::parse_strategy(o.strategy);
  c.metric = sidx::parse_metric(o.metric);
  c.alpha = o.alpha;
  c.beta = o.beta;
  if (o.tau_given) c.tau = o.tau;
  c.L = (o.split || o.L_given) ? o.L : 0;
  c.merge_cells = o.merge_cells;
  c.pq_m = o.pq_m;
  c.pq_k = o.pq_k;
  c.pq_train_points = o.pq_train;
  c.k_coarse = o.k_coarse;
  c.nprobe = o.nprobe;
  c.recall_ranks = o.R;
  c.seed = o.seed;
  return c;
}

/// Echo the structure of a loaded index instead of the command-line values.
void adopt_index_params(sidx::StrategyConfig& c, const sidx::IndexBundle& b) {
  c.alpha = b.index.params().alpha;
  c.merge_cells = b.index.mapping() ? b.index.mapping()->n_cells : 0;
  c.L = b.index.split() ? b.index.split()->L : 0;
  if (b.pq) {
    c.pq_m = b.pq->codebook.M();
    c.pq_k = b.pq->codebook.k_bits();
  }
}

/// Power-of-two buckets: "0", "1", "2-3", "4-7", ...
json length_histogram(const sidx::SemanticIndex& index) {
  std::map<std::size_t, std::size_t> buckets;
  for (const auto& l : index.lists()) {
    std::size_t b = 0;
    for (std::size_t n = l.size(); n > 0; n >>= 1) ++b;
    ++buckets[b];
  }
  json h = json::object();
  for (auto [b, count] : buckets) {
    std::string key;
    if (b <= 1) {
      key = std::to_string(b);
    } else {
      const std::size_t lo = std::size_t{1} << (b - 1);
      key = std::to_string(lo) + "-" + std::to_string(2 * lo - 1);
    }
    h[key] = count;
  }
  return h;
}

json index_summary(const sidx::SemanticIndex& index, const sidx::ResidualPQStore* pq) {
  json j;
  j["n"] = index.n_items();
  j["n_labels"] = index.params().n_labels;
  j["n_cells"] = index.n_lists();
  j["alpha"] = index.params().alpha;
  j["total_postings"] = index.total_postings();
  if (const auto& s = index.split()) {
    std::size_t cells = 0;
    for (const auto& p : s->partitions) cells += p.nonempty();
    j["split"] = {{"L", s->L}, {"sub_cells", cells}};
  } else {
    j["split"] = nullptr;
  }
  if (pq) {
    j["pq"] = {{"M", pq->codebook.M()}, {"K", pq->codebook.k_bits()}};
  } else {
    j["pq"] = nullptr;
  }
  j["list_length_histogram"] = length_histogram(index);
  return j;
}

void save_and_report(const std::string& path, const sidx::SemanticIndex& index,
                     const sidx::ResidualPQStore* pq) {
  sidx::save_index(path, index, pq);
  json j;
  j["index"] = path;
  j.update(index_summary(index, pq));
  std::cout << j.dump(2) << "\n";
}

int cmd_synth(const Options& o) {
  const fs::path dir = require(o.out, "--out", "(output directory)");
  auto cfg = o.synth;
  cfg.seed = sidx::derive_seed(o.seed, "synth");
  const auto ds = sidx::synth_dataset(cfg);
  fs::create_directories(dir);
  sidx::write_features(dir / "db.fvec", ds.db);
  sidx::write_labels(dir / "db.lbl", ds.db_labels);
  sidx::write_features(dir / "queries.fvec", ds.queries);
  sidx::write_labels(dir / "queries.lbl", ds.query_labels);
  sidx::write_ground_truth(dir / "gt.txt", ds.ground_truth);
  json j;
  j["out"] = dir.string();
  j["n_db"] = cfg.n_db;
  j["n_queries"] = cfg.n_queries;
  j["d"] = cfg.d;
  j["n_labels"] = cfg.n_labels;
  j["clusters"] = cfg.clusters;
  j["label_noise"] = cfg.label_noise;
  j["files"] = {"db.fvec", "db.lbl", "queries.fvec", "queries.lbl", "gt.txt"};
  std::cout << j.dump(2) << "\n";
  return 0;
}

std::string output_index_path(const Options& o) {
  if (!o.out.empty()) return o.out;
  return require(o.index, "--index", "(or --out) as the index path");
}

int cmd_build(const Options& o) {
  const auto path = output_index_path(o);
  const auto labels = sidx::read_labels(require(o.labels, "--labels", "to build an index"));
  const auto cfg = strategy_config(o);
  std::optional<sidx::FeatureSet> db;
  if (cfg.L != 0 || o.pq) {
    db = sidx::read_features(require(o.features, "--features", "to split or compress the index"));
  }
  const auto built = sidx::build_semantic(cfg, labels, db ? &*db : nullptr, o.pq);
  save_and_report(path, built.index, built.pq ? &*built.pq : nullptr);
  return 0;
}

// Rebuilds the index under a label merge, keeping alpha and recreating any
// split or PQ block with the parameters the input index used.
int cmd_merge(const Options& o) {
  if (o.merge_cells == 0) throw sidx::ConfigError("--merge-cells is required for merge");
  const auto in = sidx::load_index(require(o.index, "--index", "(index to merge)"));
  const auto labels = sidx::read_labels(require(o.labels, "--labels", "to compute co-occurrence"));
  auto cfg = strategy_config(o);
  cfg.alpha = in.index.params().alpha;
  cfg.L = in.index.split() ? in.index.split()->L : 0;
  if (in.pq) {
    cfg.pq_m = in.pq->codebook.M();
    cfg.pq_k = in.pq->codebook.k_bits();
  }
  std::optional<sidx::FeatureSet> db;
  if (cfg.L != 0 || in.pq) {
    db = sidx::read_features(
        require(o.features, "--features", "to rebuild the split and PQ blocks after merging"));
  }
  const auto built = sidx::build_semantic(cfg, labels, db ? &*db : nullptr, in.pq.has_value());
  save_and_report(o.out.empty() ? o.index : o.out, built.index, built.pq ? &*built.pq : nullptr);
  return 0;
}

int cmd_split(const Options& o) {
  auto in = sidx::load_index(require(o.index, "--index", "(index to split)"));
  const auto db = sidx::read_features(require(o.features, "--features", "to split"));
  const auto split =
      sidx::split_index(in.index, db, o.L, sidx::derive_seed(o.seed, "split"));
  save_and_report(o.out.empty() ? o.index : o.out, split, in.pq ? &*in.pq : nullptr);
  return 0;
}

/// Everything a query-side command needs, loaded once.
struct Workspace {
  sidx::StrategyConfig cfg;
  std::optional<sidx::IndexBundle> bundle;
  std::optional<sidx::FeatureSet> db;
  std::optional<sidx::LabelMatrix> db_labels;
  sidx::FeatureSet queries;
  std::optional<sidx::LabelMatrix> query_labels;

  sidx::EngineInputs inputs() const {
    sidx::EngineInputs in;
    in.db = db ? &*db : nullptr;
    in.db_labels = db_labels ? &*db_labels : nullptr;
    if (bundle) {
      in.index = &bundle->index;
      in.pq = bundle->pq ? &*bundle->pq : nullptr;
    }
    return in;
  }
};

bool is_semantic(sidx::Strategy s) {
  return s == sidx::Strategy::semantic || s == sidx::Strategy::semantic_adc;
}

Workspace load_workspace(const Options& o) {
  Workspace w;
  w.cfg = strategy_config(o);
  const bool semantic = is_semantic(w.cfg.strategy);
  if (semantic && !o.index.empty()) {
    w.bundle = sidx::load_index(o.index);
    adopt_index_params(w.cfg, *w.bundle);
  }
  // Compressed semantic search over a stored PQ block reads no database vectors.
  const bool codes_only =
      w.cfg.strategy == sidx::Strategy::semantic_adc && w.bundle && w.bundle->pq;
  if (!codes_only) {
    w.db = sidx::read_features(require(o.features, "--features", "for this strategy"));
  }
  if (semantic && !w.bundle) {
    w.db_labels = sidx::read_labels(require(o.labels, "--labels", "to build the semantic index"));
  } else if (!o.labels.empty() && !semantic) {
    // Lets k_coarse default to the label vocabulary size.
    w.db_labels = sidx::read_labels(o.labels);
  }
  w.queries = sidx::read_features(require(o.queries, "--queries", "(query features)"));
  if (semantic) {
    w.query_labels = sidx::read_labels(require(o.query_labels, "--query-labels", "for semantic strategies"));
  }
  return w;
}

int cmd_query(const Options& o) {
  const auto w = load_workspace(o);
  const auto engine = sidx::make_engine(w.cfg, w.inputs());
  const std::size_t R = *std::max_element(o.R.begin(), o.R.end());
  std::string text;
  char buf[64];
  for (std::size_t q = 0; q < w.queries.n(); ++q) {
    const sidx::LabelRow row = w.query_labels ? w.query_labels->row(q) : sidx::LabelRow{};
    const auto result = engine->search(w.queries.row(q), row, R);
    text += std::to_string(q);
    for (const auto& it : result.ranking.items) {
      std::snprintf(buf, sizeof buf, " %llu:%.9g", static_cast<unsigned long long>(it.id), it.score);
      text += buf;
    }
    text += '\n';
  }
  emit(o.out, text);
  return 0;
}

int cmd_eval(const Options& o) {
  const auto w = load_workspace(o);
  const auto gt = sidx::read_ground_truth(require(o.gt, "--gt", "for evaluation"));
  const auto engine = sidx::make_engine(w.cfg, w.inputs());
  const auto report =
      sidx::evaluate(*engine, w.cfg, w.queries, w.query_labels ? &*w.query_labels : nullptr, gt);
  emit(o.out, sidx::to_json(report).dump(2) + "\n");
  if (!o.csv.empty()) {
    write_text_atomic(o.csv, sidx::csv_header(report.recall_ranks) + "\n" + sidx::csv_row(report) + "\n");
  }
  return 0;
}

// alpha x beta grid (one index per alpha), or beta x tau when --taus is given
// (one split index shared by every cell).
int cmd_sweep(const Options& o) {
  auto w = load_workspace(o);
  if (!is_semantic(w.cfg.strategy)) throw sidx::ConfigError("sweep needs a semantic strategy");
  const auto gt = sidx::read_ground_truth(require(o.gt, "--gt", "for a sweep"));
  const bool with_pq = w.cfg.strategy == sidx::Strategy::semantic_adc;
  const auto betas = o.betas.empty() ? std::vector<std::size_t>{o.beta} : o.betas;
  const auto* qlabels = &*w.query_labels;

  std::string text = sidx::csv_header(w.cfg.recall_ranks) + "\n";
  auto run_cell = [&](const sidx::StrategyConfig& cfg, const sidx::EngineInputs& in) {
    const auto engine = sidx::make_engine(cfg, in);
    text += sidx::csv_row(sidx::evaluate(*engine, cfg, w.queries, qlabels, gt)) + "\n";
  };

  if (!o.taus.empty()) {
    if (!o.alphas.empty()) throw sidx::ConfigError("sweep: give --alphas or --taus, not both");
    std::optional<sidx::SemanticBuild> owned;
    auto in = w.inputs();
    auto cfg = w.cfg;
    if (!w.bundle) {
      if (cfg.L == 0) cfg.L = o.L;
      owned = sidx::build_semantic(cfg, *w.db_labels, in.db, with_pq);
      in.index = &owned->index;
      in.pq = owned->pq ? &*owned->pq : nullptr;
    }
    if (!in.index->split()) throw sidx::ConfigError("sweep over tau needs a split index");
    cfg.L = in.index->split()->L;
    for (std::size_t beta : betas) {
      for (double tau : o.taus) {
        cfg.beta = beta;
        cfg.tau = tau;
        run_cell(cfg, in);
      }
    }
  } else {
    if (w.bundle) throw sidx::ConfigError("sweep over alpha rebuilds the index; omit --index");
    const auto alphas = o.alphas.empty() ? std::vector<std::size_t>{o.alpha} : o.alphas;
    for (std::size_t alpha : alphas) {
      auto cfg = w.cfg;
      cfg.alpha = alpha;
      const auto built = sidx::build_semantic(cfg, *w.db_labels, w.db ? &*w.db : nullptr, with_pq);
      auto in = w.inputs();
      in.index = &built.index;
      in.pq = built.pq ? &*built.pq : nullptr;
      for (std::size_t beta : betas) {
        cfg.beta = beta;
        run_cell(cfg, in);
      }
    }
  }
  emit(o.csv.empty() ? o.out : o.csv, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic inverted index: synthesize, build, query, evaluate"};
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.get_formatter()->column_width(32);

  Options o;
  const std::string io = "Files";
  app.add_option("--features", o.features, "database feature file (.fvec)")->group(io);
  app.add_option("--labels", o.labels, "database label file (.lbl)")->group(io);
  app.add_option("--queries", o.queries, "query feature file")->group(io);
  app.add_option("--query-labels", o.query_labels, "query label file")->group(io);
  app.add_option("--gt", o.gt, "ground-truth text file")->group(io);
  app.add_option("--index", o.index, "index file")->group(io);
  app.add_option("--out", o.out, "output path (directory for synth)")->group(io);
  app.add_option("--csv", o.csv, "CSV output path")->group(io);

  const std::string ix = "Index";
  app.add_option("--alpha", o.alpha, "labels each item is stored under")->capture_default_str()->group(ix);
  app.add_option("--merge-cells", o.merge_cells, "merge labels into this many cells (0: off)")
      ->capture_default_str()->group(ix);
  auto* L_opt = app.add_option("--L", o.L, "sub-cells per partition; enables splitting")
                    ->capture_default_str()->check(CLI::PositiveNumber)->group(ix);
  app.add_flag("--split", o.split, "split partitions with the default L")->group(ix);
  app.add_flag("--pq", o.pq, "store residual PQ codes in the index")->group(ix);
  app.add_option("--pq-m", o.pq_m, "PQ subspaces")->capture_default_str()->group(ix);
  app.add_option("--pq-k", o.pq_k, "bits per PQ code (<= 8)")->capture_default_str()->group(ix);
  app.add_option("--pq-train", o.pq_train, "PQ training sample cap (0: all)")->capture_default_str()->group(ix);

  const std::string se = "Search";
  app.add_option("--strategy", o.strategy, "retrieval strategy")
      ->check(CLI::IsMember({"exhaustive", "ivf", "ivf-adc", "adc", "semantic", "semantic-adc"}))
      ->capture_default_str()->group(se);
  app.add_option("--metric", o.metric, "l2 or cosine")
      ->check(CLI::IsMember({"l2", "cosine"}))->capture_default_str()->group(se);
  app.add_option("--beta", o.beta, "query labels whose cells are reclaimed")->capture_default_str()->group(se);
  auto* tau_opt = app.add_option("--tau", o.tau, "fraction of sub-cells kept per partition; enables pruning")
                      ->capture_default_str()->group(se);
  app.add_option("--nprobe", o.nprobe, "IVF cells probed")->capture_default_str()->group(se);
  app.add_option("--k-coarse", o.k_coarse, "IVF coarse cells (0: label count)")->capture_default_str()->group(se);
  app.add_option("--R", o.R, "recall ranks; query returns the largest")
      ->delimiter(',')->capture_default_str()->group(se);
  app.add_option("--seed", o.seed, "master seed")->capture_default_str()->group(se);

  const std::string sw = "Sweep";
  app.add_option("--alphas", o.alphas, "alpha grid")->delimiter(',')->group(sw);
  app.add_option("--betas", o.betas, "beta grid")->delimiter(',')->group(sw);
  app.add_option("--taus", o.taus, "tau grid")->delimiter(',')->group(sw);

  const std::string sy = "Synthetic data";
  app.add_option("--n-db", o.synth.n_db)->capture_default_str()->group(sy);
  app.add_option("--n-queries", o.synth.n_queries)->capture_default_str()->group(sy);
  app.add_option("--d", o.synth.d, "dimension")->capture_default_str()->group(sy);
  app.add_option("--n-labels", o.synth.n_labels)->capture_default_str()->group(sy);
  app.add_option("--clusters", o.synth.clusters)->capture_default_str()->group(sy);
  app.add_option("--label-noise", o.synth.label_noise)->capture_default_str()->group(sy);
  app.add_option("--top-k", o.synth.top_k, "labels stored per row")->capture_default_str()->group(sy);

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset bundle to --out");
  auto* build = app.add_subcommand("build", "build an index from --labels");
  auto* merge = app.add_subcommand("merge", "rebuild --index with labels merged into --merge-cells cells");
  auto* split = app.add_subcommand("split", "split the partitions of --index into --L sub-cells");
  auto* query = app.add_subcommand("query", "rank the database for every query");
  auto* eval = app.add_subcommand("eval", "evaluate one strategy against --gt");
  auto* sweep = app.add_subcommand("sweep", "evaluate an alpha x beta or beta x tau grid as CSV");

  CLI11_PARSE(app, argc, argv);
  o.tau_given = tau_opt->count() > 0;
  o.L_given = L_opt->count() > 0;

  try {
    if (*synth) return cmd_synth(o);
    if (*build) return cmd_build(o);
    if (*merge) return cmd_merge(o);
    if (*split) return cmd_split(o);
    if (*query) return cmd_query(o);
    if (*eval) return cmd_eval(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const std::exception& e) {
    std::cerr << "sidx: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
