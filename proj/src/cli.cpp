#include "pairrank/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pairrank/analysis.hpp"
#include "pairrank/annotate.hpp"
#include "pairrank/dataset.hpp"
#include "pairrank/error.hpp"
#include "pairrank/eval.hpp"
#include "pairrank/featurizer.hpp"
#include "pairrank/image.hpp"
#include "pairrank/ingest.hpp"
#include "pairrank/pairing.hpp"
#include "pairrank/phash.hpp"
#include "pairrank/ranker.hpp"
#include "pairrank/stats.hpp"
#include "pairrank/synth.hpp"

namespace fs = std::filesystem;

namespace pairrank {
namespace {

struct Options {
  std::string in;
  std::string out;
  std::string pairs;
  std::string model;
  std::string images;
  std::string features = "unigram";
  std::vector<std::string> embeddings;
  std::uint64_t seed = 0;

  PairConfig pair;
  std::string sampler = "time";

  TrainConfig train;
  int min_df = 5;
  std::size_t hog_dim = 2048;
  bool unigram_counts = false;
  bool no_quality_indices = false;

  std::size_t folds = 15;
  double test_fraction = 0.20;
  double val_fraction = 0.10;
  bool breakdown = false;
  std::string report;
  std::string records;

  std::string ledger;
  bool force = false;

  std::string community;
  int min_daily = 15;
  int hamming = 5;
  double max_error_rate = 0.01;

  std::string preset = "default";
  std::string market;
  std::vector<std::string> settings;
  bool write_images = false;

  int window_minutes = 30;
  std::string judgments;

  std::string bind = "127.0.0.1:8080";
  std::string assets;
  std::string log = "judgments.jsonl";
};

const std::set<std::string> kFlagKeys = {"force", "breakdown", "images",
                                         "unigram-counts", "no-quality-indices"};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

fs::path data_dir(const Options& o) {
  if (o.in.empty()) throw UsageError("--in is required");
  return o.in;
}

fs::path image_base(const Options& o) {
  return o.images.empty() ? data_dir(o) : fs::path(o.images);
}

std::vector<EmbeddingTable> load_embedding_tables(const Options& o) {
  std::vector<EmbeddingTable> tables;
  for (const auto& spec : o.embeddings) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--embeddings expects name=path, got " + spec);
    }
    tables.push_back(load_embeddings(spec.substr(eq + 1), spec.substr(0, eq)));
  }
  return tables;
}

FeaturizerOptions featurizer_options(const Options& o) {
  FeaturizerOptions f;
  f.groups = parse_feature_groups(o.features);
  f.min_df = o.min_df;
  f.hog_dim = o.hog_dim;
  f.unigram_counts = o.unigram_counts;
  f.projection_seed = o.seed;
  f.quality_indices = !o.no_quality_indices;
  return f;
}

TrainConfig train_config(const Options& o) {
  TrainConfig c = o.train;
  c.seed = o.seed;
  c.validate();
  return c;
}

CVOptions cv_options(const Options& o) {
  CVOptions c;
  c.n_splits = o.folds;
  c.test_fraction = o.test_fraction;
  c.val_fraction = o.val_fraction;
  c.seed = o.seed;
  if (c.n_splits < 2) throw UsageError("--folds must be at least 2");
  if (!(c.test_fraction > 0 && c.test_fraction < 1)) {
    throw UsageError("--test-fraction must be in (0, 1)");
  }
  if (!(c.val_fraction > 0 && c.val_fraction < 1)) {
    throw UsageError("--val-fraction must be in (0, 1)");
  }
  return c;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// Subcommands.

int cmd_ingest(const Options& o) {
  const fs::path in = data_dir(o);
  if (o.out.empty()) throw UsageError("--out is required");
  const fs::path out = o.out;
  ParseOptions popts;
  popts.max_error_rate = o.max_error_rate;
  auto subs = read_submissions(in / "submissions.jsonl", popts);
  for (const auto& d : subs.diagnostics) log_line("submissions.jsonl: " + d);
  std::vector<Submission> kept;
  for (auto& s : subs.records) {
    if (!o.community.empty() && s.community != o.community) continue;
    kept.push_back(std::move(s));
  }
  std::size_t dropped_images = 0;
  fs::create_directories(out);
  for (auto& s : kept) {
    if (!s.image_ref) continue;
    const fs::path src = in / *s.image_ref;
    const auto loaded = load_normalized_image(src);
    if (!loaded.image) {
      log_line("dropping " + s.id + ": " + loaded.reason);
      s.id.clear();
      ++dropped_images;
      continue;
    }
    s.image_ref = fs::relative(fs::absolute(src), fs::absolute(out)).generic_string();
  }
  std::erase_if(kept, [](const Submission& s) { return s.id.empty(); });
  const auto active = filter_active_days_by_community(kept, o.min_daily);
  write_submissions(out / "submissions.jsonl", active);

  std::vector<Comment> comments;
  if (fs::exists(in / "comments.jsonl")) {
    auto parsed = read_comments(in / "comments.jsonl", popts);
    for (const auto& d : parsed.diagnostics) log_line("comments.jsonl: " + d);
    comments = std::move(parsed.records);
    std::unordered_set<std::string> all_ids;
    for (const auto& s : subs.records) all_ids.insert(s.id);
    const auto orphans = find_orphan_comments(comments, all_ids);
    if (!orphans.empty()) log_line(std::to_string(orphans.size()) + " orphan comments");
  }
  write_comments(out / "comments.jsonl", comments);
  std::cout << "submissions read " << subs.records.size() + subs.skipped
            << ", skipped " << subs.skipped << ", image failures " << dropped_images
            << ", kept " << active.size() << "\n";
  return kExitOk;
}

int cmd_dedup(const Options& o) {
  const fs::path in = data_dir(o);
  const fs::path out = o.out.empty() ? in : fs::path(o.out);
  auto subs = read_submissions(in / "submissions.jsonl").records;
  std::unordered_map<std::string, PerceptualHash> hashes;
  std::vector<Submission> usable;
  for (auto& s : subs) {
    if (s.image_ref) {
      const auto loaded = load_normalized_image(image_base(o) / *s.image_ref);
      if (!loaded.image) {
        log_line("dropping " + s.id + ": " + loaded.reason);
        continue;
      }
      hashes[s.id] = phash64(*loaded.image);
    }
    usable.push_back(std::move(s));
  }
  const auto groups = duplicate_groups(usable, hashes, o.hamming);
  const auto kept = dedup(usable, hashes, o.hamming);
  fs::create_directories(out);
  std::vector<Submission> rebased = kept;
  if (fs::absolute(out) != fs::absolute(in)) {
    for (auto& s : rebased) {
      if (s.image_ref) {
        s.image_ref = fs::relative(fs::absolute(image_base(o) / *s.image_ref), fs::absolute(out))
                          .generic_string();
      }
    }
    if (fs::exists(in / "comments.jsonl")) {
      fs::copy_file(in / "comments.jsonl", out / "comments.jsonl",
                    fs::copy_options::overwrite_existing);
    }
  }
  write_submissions(out / "submissions.jsonl", rebased);
  auto hash_out = open_out(out / "phash.tsv");
  for (const auto& s : usable) {
    const auto it = hashes.find(s.id);
    if (it != hashes.end()) hash_out << s.id << '\t' << to_hex(it->second) << '\n';
  }
  std::cout << "duplicate groups " << groups.size() << ", removed "
            << usable.size() - kept.size() << ", kept " << kept.size() << "\n";
  return kExitOk;
}

int cmd_pairs(const Options& o) {
  const Dataset data = Dataset::load(data_dir(o));
  if (o.out.empty()) throw UsageError("--out is required");
  o.pair.validate();
  std::vector<RankedPair> pairs;
  if (o.sampler == "time") {
    pairs = sample_pairs(data.submissions(), o.pair, o.seed);
  } else if (o.sampler == "same-day") {
    pairs = sample_same_day_random_pairs(data.submissions(), o.pair, o.seed);
  } else {
    throw UsageError("--sampler must be time or same-day");
  }
  write_pairs(fs::path(o.out), pairs);
  if (pairs.empty()) {
    std::cout << "pairs 0\n";
    return kExitOk;
  }
  const auto st = pair_stats(pairs);
  std::printf("pairs %zu\nmean_gap %.2f\nmedian_gap %.1f\nmean_diff %.2f\nmedian_diff %.1f\n",
              st.count, st.mean_gap, st.median_gap, st.mean_score_diff, st.median_score_diff);
  return kExitOk;
}

fs::path default_pairs(const Options& o, const fs::path& dir) {
  return o.pairs.empty() ? dir / "pairs.csv" : fs::path(o.pairs);
}

fs::path dir_of(const std::string& file) {
  const fs::path p(file);
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

int cmd_featurize(const Options& o) {
  const fs::path in = data_dir(o);
  if (o.out.empty()) throw UsageError("--out is required");
  const auto fopts = featurizer_options(o);
  const Dataset data = Dataset::load(in);
  const auto pairs = read_pairs(default_pairs(o, in));
  const auto tables = load_embedding_tables(o);
  const DirectoryImageSource images(image_base(o));
  FeatureExtractor extractor(data, fopts, &images, &tables);
  const auto ids = pair_member_ids(pairs);
  extractor.prepare(ids);
  const auto fitted = FittedFeaturizer::fit(extractor, ids);
  const auto fv = featurize_pairs(fitted, extractor, pairs);
  auto out = open_out(o.out);
  out << "#dim\t" << fitted.space().dim() << '\n';
  for (const auto& g : fitted.space().groups()) {
    out << "#group\t" << g.name << '\t' << g.offset << '\t' << g.dim << '\n';
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (int slot = 0; slot < 2; ++slot) {
      out << pairs[i].pair_id << '\t' << (slot == 0 ? 'a' : 'b') << '\t'
          << (pairs[i].label == Label::kAWins ? 'a' : 'b');
      for (const auto& [idx, v] : (slot == 0 ? fv[i].a : fv[i].b).entries) {
        out << '\t' << idx << ':' << fmt17(v);
      }
      out << '\n';
    }
  }
  std::cout << "pairs " << pairs.size() << ", dimension " << fitted.space().dim() << "\n";
  return kExitOk;
}

int cmd_train(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const fs::path in = o.in.empty() ? dir_of(o.out) : fs::path(o.in);
  Options local = o;
  local.in = in.string();
  const auto fopts = featurizer_options(o);
  const auto cfg = train_config(o);
  const Dataset data = Dataset::load(in);
  const auto pairs = read_pairs(default_pairs(o, in));
  const auto tables = load_embedding_tables(o);
  const DirectoryImageSource images(image_base(local));
  FeatureExtractor extractor(data, fopts, &images, &tables);
  const auto model = train_on_pairs(extractor, pairs, cfg, o.val_fraction);
  model.save(o.out);
  std::printf("pairs %zu\nepochs %d\nbest_epoch %d\nvalidation_accuracy %.4f\n", pairs.size(),
              model.summary().epochs_run, model.summary().best_epoch,
              model.summary().best_validation_accuracy);
  return kExitOk;
}

int cmd_evaluate(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  const RankerModel model = RankerModel::load(o.model);
  const fs::path in = o.in.empty() ? dir_of(o.model) : fs::path(o.in);
  Options local = o;
  local.in = in.string();
  const Dataset data = Dataset::load(in);
  const auto pairs = read_pairs(default_pairs(o, in));
  const auto tables = load_embedding_tables(o);
  const DirectoryImageSource images(image_base(local));
  const CVOptions cv = cv_options(o);
  TrainConfig cfg = model.config();

  FeaturizerOptions fopts = model.featurizer().options();
  std::vector<std::vector<std::string>> rows{fopts.groups};
  if (o.breakdown && fopts.groups.size() > 1) {
    for (const auto& g : fopts.groups) rows.push_back({g});
  }
  CVReport report;
  for (const auto& groups : rows) {
    FeaturizerOptions f = fopts;
    f.groups = groups;
    FeatureExtractor extractor(data, f, &images, &tables);
    report.rows.push_back(cross_validate(pairs, extractor, cfg, cv));
  }
  const fs::path report_path = o.report.empty() ? fs::path(o.model + ".report.txt") : fs::path(o.report);
  const fs::path records_path =
      o.records.empty() ? fs::path(o.model + ".records.tsv") : fs::path(o.records);
  {
    auto out = open_out(report_path);
    report.write_table(out);
  }
  {
    auto out = open_out(records_path);
    report.write_records(out);
  }
  report.write_table(std::cout);
  return kExitOk;
}

int cmd_heldout(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  if (o.pairs.empty()) throw UsageError("--pairs is required");
  const RankerModel model = RankerModel::load(o.model);
  const fs::path in = o.in.empty() ? dir_of(o.model) : fs::path(o.in);
  Options local = o;
  local.in = in.string();
  const fs::path ledger_path =
      o.ledger.empty() ? fs::path(o.model + ".heldout-ledger") : fs::path(o.ledger);
  EvaluationLedger ledger(ledger_path);
  const std::string model_digest = file_sha256(o.model);
  const std::string pairs_digest = file_sha256(o.pairs);
  if (ledger.contains(model_digest, pairs_digest) && !o.force) {
    throw UsageError("model " + o.model + " was already evaluated on " + o.pairs +
                     "; rerun with --force to repeat");
  }
  const Dataset data = Dataset::load(in);
  const auto pairs = read_pairs(fs::path(o.pairs));
  const auto tables = load_embedding_tables(o);
  const DirectoryImageSource images(image_base(local));
  FeatureExtractor extractor(data, model.featurizer().options(), &images, &tables);
  const double acc = heldout_accuracy(model, extractor, pairs, o.seed);
  ledger.record(model_digest, pairs_digest, o.force);
  std::printf("pairs %zu\naccuracy %.4f\n", pairs.size(), acc);
  return kExitOk;
}

int cmd_score(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  if (o.out.empty()) throw UsageError("--out is required");
  const RankerModel model = RankerModel::load(o.model);
  const fs::path in = o.in.empty() ? dir_of(o.model) : fs::path(o.in);
  Options local = o;
  local.in = in.string();
  const Dataset data = Dataset::load(in);
  const auto tables = load_embedding_tables(o);
  const DirectoryImageSource images(image_base(local));
  FeatureExtractor extractor(data, model.featurizer().options(), &images, &tables);
  std::vector<std::string> ids;
  if (!o.pairs.empty()) {
    ids = pair_member_ids(read_pairs(fs::path(o.pairs)));
  } else {
    for (const auto& s : data.submissions()) ids.push_back(s.id);
  }
  extractor.prepare(ids);
  std::vector<std::pair<double, std::string>> scored;
  auto out = open_out(o.out);
  out << "id\tscore\n";
  for (const auto& id : ids) {
    const double s = model.score(model.featurizer().vectorize(extractor.raw(id)));
    scored.emplace_back(s, id);
    out << id << '\t' << fmt17(s) << '\n';
  }
  std::sort(scored.begin(), scored.end());
  if (!scored.empty()) {
    for (int pct : {99, 50, 1}) {
      const std::size_t k = std::min(scored.size() - 1, scored.size() * pct / 100);
      std::cout << "percentile " << pct << '\t' << scored[k].second << '\t'
                << fmt17(scored[k].first) << '\n';
    }
  }
  return kExitOk;
}

int cmd_analyze(const Options& o) {
  const fs::path in = data_dir(o);
  const fs::path out = o.out.empty() ? in / "analysis" : fs::path(o.out);
  const Dataset data = Dataset::load(in);
  const auto& subs = data.submissions();
  if (subs.empty()) throw DataError("no submissions in " + in.string());
  fs::create_directories(out);
  {
    auto f = open_out(out / "diurnal.tsv");
    write_profile(f, diurnal_profile(subs, o.window_minutes));
  }
  {
    auto f = open_out(out / "weekday.tsv");
    write_profile(f, weekday_profile(subs));
  }
  {
    auto f = open_out(out / "year.tsv");
    write_profile(f, year_profile(subs));
  }
  const auto mn = mean_normalize(subs);
  {
    auto f = open_out(out / "mean_normalized.tsv");
    f << "id\tmn\tneighbors\n";
    for (std::size_t i = 0; i < subs.size(); ++i) {
      f << subs[i].id << '\t' << (mn.values[i] ? fmt17(*mn.values[i]) : "nan") << '\t'
        << mn.neighbor_counts[i] << '\n';
    }
  }
  std::ostringstream summary;
  summary << "submissions\t" << subs.size() << '\n';
  summary << "mn_coverage\t" << fmt17(mn.coverage) << '\n';
  summary << "mn_mean_neighbors\t" << fmt17(mn.mean_neighbors) << '\n';
  summary << "mn_undefined\t" << mn.undefined << '\n';
  try {
    const auto m = score_moments(subs);
    summary << "skewness\t" << fmt17(m.skewness) << '\n';
    summary << "excess_kurtosis\t" << fmt17(m.excess_kurtosis) << '\n';
  } catch (const DataError& e) {
    summary << "moments\tundefined (" << e.what() << ")\n";
  }

  std::vector<RankedPair> pairs;
  if (!o.pairs.empty()) {
    pairs = read_pairs(fs::path(o.pairs));
    if (!pairs.empty()) {
      const auto st = pair_stats(pairs);
      summary << "pairs\t" << st.count << '\n';
      summary << "pairs_mean_gap\t" << fmt17(st.mean_gap) << '\n';
      summary << "pairs_median_diff\t" << fmt17(st.median_score_diff) << '\n';
    }
  }
  if (!o.judgments.empty()) {
    if (pairs.empty()) throw UsageError("--judgments needs --pairs");
    std::ifstream jf(o.judgments);
    if (!jf) throw DataError("cannot open " + o.judgments);
    std::vector<Judgment> js;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(jf, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        js.push_back(judgment_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        throw DataError(o.judgments + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    const auto acc = human_accuracy(js, pairs);
    auto f = open_out(out / "human_accuracy.tsv");
    f << "annotator\tn\tcorrect\taccuracy\n";
    for (const auto& [who, c] : acc.per_annotator) {
      f << who << '\t' << c.n << '\t' << c.correct << '\t' << fmt17(c.accuracy()) << '\n';
    }
    f << "all\t" << acc.aggregate.n << '\t' << acc.aggregate.correct << '\t'
      << fmt17(acc.aggregate.accuracy()) << '\n';
    summary << "human_accuracy\t" << fmt17(acc.aggregate.accuracy()) << '\n';
  }
  if (!o.model.empty()) {
    if (pairs.empty()) throw UsageError("--model needs --pairs");
    const RankerModel model = RankerModel::load(o.model);
    const auto tables = load_embedding_tables(o);
    const DirectoryImageSource images(image_base(o));
    FeatureExtractor extractor(data, model.featurizer().options(), &images, &tables);
    const auto ids = pair_member_ids(pairs);
    extractor.prepare(ids);
    const auto& fz = model.featurizer();
    std::vector<SparseVector> rows;
    std::vector<double> scores;
    for (const auto& id : ids) {
      rows.push_back(fz.vectorize(extractor.raw(id)));
      scores.push_back(model.score(rows.back()));
    }
    const std::size_t dim = fz.space().dim();
    auto f = open_out(out / "feature_correlations.tsv");
    f << "feature\tgroup\tr\tci_low\tci_high\tsignificant\n";
    constexpr std::size_t kChunk = 256;
    for (std::size_t lo = 0; lo < dim; lo += kChunk) {
      const std::size_t hi = std::min(dim, lo + kChunk);
      std::vector<std::vector<double>> cols(hi - lo, std::vector<double>(rows.size(), 0.0));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (const auto& [idx, v] : rows[r].entries) {
          if (idx >= lo && idx < hi) cols[idx - lo][r] = v;
        }
      }
      // Bonferroni over the whole space: scale alpha by the chunk share.
      const double alpha = 0.05 * static_cast<double>(hi - lo) / static_cast<double>(dim);
      const auto corr = feature_correlations(scores, cols, alpha);
      for (std::size_t c = 0; c < corr.size(); ++c) {
        const std::size_t idx = lo + c;
        std::string group;
        for (const auto& g : fz.space().groups()) {
          if (idx >= g.offset && idx < g.offset + g.dim) group = g.name;
        }
        f << idx << '\t' << group << '\t';
        if (!corr[c].defined) {
          f << "nan\tnan\tnan\tundefined\n";
          continue;
        }
        f << fmt17(corr[c].r) << '\t' << fmt17(corr[c].ci_low) << '\t' << fmt17(corr[c].ci_high)
          << '\t' << (corr[c].significant ? "yes" : "no") << '\n';
      }
    }
  }
  auto sf = open_out(out / "summary.tsv");
  sf << summary.str();
  std::cout << summary.str();
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  MarketConfig cfg = market_preset(o.preset);
  if (!o.market.empty()) {
    for (const auto& [k, v] : read_config_file(o.market)) apply_market_setting(cfg, k, v);
  }
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
    apply_market_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.seed = o.seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Market market = generate(cfg);
  write_market(o.out, market, o.write_images);
  std::cout << "submissions " << market.submissions.size() << "\ncomments "
            << market.comments.size() << "\n";
  return kExitOk;
}

std::atomic<AnnotationServer*> g_server{nullptr};

void handle_stop_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const Options& o) {
  if (o.pairs.empty()) throw UsageError("--pairs is required");
  const fs::path in = data_dir(o);
  const Dataset data = Dataset::load(in);
  auto pairs = read_pairs(fs::path(o.pairs));
  const DirectoryImageSource images(image_base(o));
  AnnotateConfig cfg;
  cfg.log_path = o.log;
  cfg.seed = o.seed;
  if (!o.assets.empty()) cfg.assets_dir = o.assets;
  AnnotationStore store(data, std::move(pairs), &images, cfg);
  AnnotationServer server(store);
  const auto colon = o.bind.rfind(':');
  if (colon == std::string::npos) throw UsageError("--bind expects host:port");
  int port = 0;
  try {
    port = std::stoi(o.bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--bind expects host:port");
  }
  const int bound = server.bind(o.bind.substr(0, colon), port);
  if (bound < 0) throw DataError("cannot bind " + o.bind);
  std::cout << "listening on " << o.bind.substr(0, colon) << ':' << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Random seed");
}

void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--in", o.in, "Dataset directory");
  sub->add_option("--images", o.images, "Base directory for image paths (default: --in)");
}

void add_features(CLI::App* sub, Options& o) {
  sub->add_option("--features", o.features, "Comma list of feature groups");
  sub->add_option("--embeddings", o.embeddings, "Embedding table as name=path (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sub->add_option("--min-df", o.min_df, "Minimum document frequency for unigrams");
  sub->add_option("--hog-dim", o.hog_dim, "Projected HOG dimension");
  sub->add_flag("--unigram-counts", o.unigram_counts, "Count unigrams instead of presence");
  sub->add_flag("--no-quality-indices", o.no_quality_indices, "Keep only k-rates in the quality group");
}

void add_training(CLI::App* sub, Options& o) {
  sub->add_option("--lr", o.train.learning_rate, "Learning rate");
  sub->add_option("--epochs", o.train.epochs, "Maximum epochs");
  sub->add_option("--patience", o.train.patience, "Early-stopping patience");
  sub->add_option("--l1", o.train.l1, "L1 penalty");
  sub->add_option("--l2", o.train.l2, "L2 penalty");
  sub->add_option("--margin", o.train.margin, "Hinge margin");
  sub->add_option("--hidden-units", o.train.hidden_units, "Hidden layer width (0 = linear)");
  sub->add_option("--val-fraction", o.val_fraction, "Validation share of training pairs");
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

int run_cli(const std::vector<std::string>& raw_args) {
  Options o;
  CLI::App app{"Time-controlled pairwise popularity ranking", "pairrank"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Parse, filter to active days and check images");
  add_data(ingest, o);
  ingest->add_option("--out", o.out, "Output dataset directory");
  ingest->add_option("--community", o.community, "Keep only this community");
  ingest->add_option("--min-daily", o.min_daily, "Active-day threshold (strictly more)");
  ingest->add_option("--max-error-rate", o.max_error_rate, "Allowed malformed-line share");

  auto* dedup_cmd = app.add_subcommand("dedup", "Remove every copy of repeated submissions");
  add_data(dedup_cmd, o);
  dedup_cmd->add_option("--out", o.out, "Output directory (default: in place)");
  dedup_cmd->add_option("--hamming", o.hamming, "Hash distance threshold");

  auto* pairs_cmd = app.add_subcommand("pairs", "Sample time-controlled pairs");
  add_data(pairs_cmd, o);
  add_common(pairs_cmd, o);
  pairs_cmd->add_option("--out", o.out, "Pairs CSV");
  pairs_cmd->add_option("--max-window-secs", o.pair.max_window, "Maximum posting gap");
  pairs_cmd->add_option("--min-diff", o.pair.min_score_diff, "Minimum score difference");
  pairs_cmd->add_option("--min-ratio", o.pair.min_ratio, "Minimum score ratio");
  pairs_cmd->add_option("--min-score", o.pair.min_score, "Minimum score of either member");
  pairs_cmd->add_option("--sampler", o.sampler, "time or same-day");

  auto* featurize = app.add_subcommand("featurize", "Write pair feature vectors");
  add_data(featurize, o);
  add_common(featurize, o);
  add_features(featurize, o);
  featurize->add_option("--pairs", o.pairs, "Pairs CSV (default: <in>/pairs.csv)");
  featurize->add_option("--out", o.out, "Feature file");

  auto* train = app.add_subcommand("train", "Train a pairwise ranker on all pairs");
  add_data(train, o);
  add_common(train, o);
  add_features(train, o);
  add_training(train, o);
  train->add_option("--pairs", o.pairs, "Pairs CSV (default: <in>/pairs.csv)");
  train->add_option("--out", o.out, "Model file");

  auto* evaluate = app.add_subcommand("evaluate", "Repeated-split cross validation");
  add_data(evaluate, o);
  add_common(evaluate, o);
  evaluate->add_option("--model", o.model, "Model file supplying features and training config");
  evaluate->add_option("--pairs", o.pairs, "Pairs CSV (default: <in>/pairs.csv)");
  evaluate->add_option("--embeddings", o.embeddings, "Embedding table as name=path (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  evaluate->add_option("--folds", o.folds, "Number of random splits");
  evaluate->add_option("--test-fraction", o.test_fraction, "Test share per split");
  evaluate->add_option("--val-fraction", o.val_fraction, "Validation share of training pairs");
  evaluate->add_flag("--breakdown", o.breakdown, "Also evaluate each feature group alone");
  evaluate->add_option("--report", o.report, "Report table path");
  evaluate->add_option("--records", o.records, "Record file path");

  auto* heldout = app.add_subcommand("heldout", "One-shot evaluation on held-out pairs");
  add_data(heldout, o);
  add_common(heldout, o);
  heldout->add_option("--model", o.model, "Model file");
  heldout->add_option("--pairs", o.pairs, "Held-out pairs CSV");
  heldout->add_option("--embeddings", o.embeddings, "Embedding table as name=path (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  heldout->add_option("--ledger", o.ledger, "Evaluation ledger path");
  heldout->add_flag("--force", o.force, "Repeat an evaluation already in the ledger");

  auto* score = app.add_subcommand("score", "Unpaired scores for submissions");
  add_data(score, o);
  score->add_option("--model", o.model, "Model file");
  score->add_option("--pairs", o.pairs, "Score only members of these pairs");
  score->add_option("--embeddings", o.embeddings, "Embedding table as name=path (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  score->add_option("--out", o.out, "Score TSV");

  auto* analyze = app.add_subcommand("analyze", "Exploratory statistics and plot data");
  add_data(analyze, o);
  analyze->add_option("--out", o.out, "Output directory (default: <in>/analysis)");
  analyze->add_option("--window-minutes", o.window_minutes, "Diurnal smoothing window");
  analyze->add_option("--pairs", o.pairs, "Pairs CSV");
  analyze->add_option("--model", o.model, "Model for feature correlations");
  analyze->add_option("--embeddings", o.embeddings, "Embedding table as name=path (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  analyze->add_option("--judgments", o.judgments, "Judgment log for human accuracy");

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic community");
  add_common(simulate, o);
  simulate->add_option("--out", o.out, "Output dataset directory");
  simulate->add_option("--preset", o.preset, "default, time-control, content or user");
  simulate->add_option("--market", o.market, "key=value market settings file");
  simulate->add_option("--set", o.settings, "Market setting key=value (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  simulate->add_flag("--images", o.write_images, "Write PNG images");

  auto* serve = app.add_subcommand("serve-annotate", "Serve the pairwise judgment API");
  add_data(serve, o);
  add_common(serve, o);
  serve->add_option("--pairs", o.pairs, "Pairs CSV to annotate");
  serve->add_option("--bind", o.bind, "host:port");
  serve->add_option("--assets", o.assets, "Static UI directory");
  serve->add_option("--log", o.log, "Judgment log (JSON lines)");

  // Pull --config out, then splice its settings in ahead of the explicit
  // flags so that the flags win.
  std::vector<std::string> args;
  std::string config_path;
  for (std::size_t i = 1; i < raw_args.size(); ++i) {
    const std::string& a = raw_args[i];
    if (a == "--config") {
      if (i + 1 >= raw_args.size()) {
        std::cerr << "--config needs a file\n" << app.help();
        return kExitUsage;
      }
      config_path = raw_args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      args.push_back(a);
    }
  }

  try {
    if (!config_path.empty()) {
      const auto settings = read_config_file(config_path);
      CLI::App* active = nullptr;
      for (const auto& a : args) {
        if (a.rfind("-", 0) == 0) continue;
        try {
          active = app.get_subcommand(a);
        } catch (const CLI::OptionNotFound&) {
        }
        break;
      }
      std::vector<std::string> injected;
      for (const auto& [key, value] : settings) {
        bool known = false;
        for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) {
          if (sub->get_option_no_throw("--" + key)) known = true;
        }
        if (!known) throw UsageError("unknown config key: " + key);
        if (!active || !active->get_option_no_throw("--" + key)) continue;
        if (kFlagKeys.count(key)) {
          if (value == "true" || value == "1") {
            injected.push_back("--" + key);
          } else if (value != "false" && value != "0") {
            throw UsageError("config key " + key + " expects true or false");
          }
        } else {
          injected.push_back("--" + key);
          injected.push_back(value);
        }
      }
      if (active) {
        const auto pos = std::find(args.begin(), args.end(), active->get_name());
        args.insert(pos + 1, injected.begin(), injected.end());
      }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << e.what() << "\n\n";
      auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
      std::cerr << sub->help();
      return kExitUsage;
    }

    const auto* sub = app.get_subcommands().front();
    const std::string& name = sub->get_name();
    if (name == "ingest") return cmd_ingest(o);
    if (name == "dedup") return cmd_dedup(o);
    if (name == "pairs") return cmd_pairs(o);
    if (name == "featurize") return cmd_featurize(o);
    if (name == "train") return cmd_train(o);
    if (name == "evaluate") return cmd_evaluate(o);
    if (name == "heldout") return cmd_heldout(o);
    if (name == "score") return cmd_score(o);
    if (name == "analyze") return cmd_analyze(o);
    if (name == "simulate") return cmd_simulate(o);
    if (name == "serve-annotate") return cmd_serve(o);
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace pairrank
