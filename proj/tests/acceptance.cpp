// Acceptance runner: one PASS/FAIL/SKIP line per criterion, exit 1 on any
// FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pairrank/analysis.hpp"
#include "pairrank/cli.hpp"
#include "pairrank/dataset.hpp"
#include "pairrank/error.hpp"
#include "pairrank/eval.hpp"
#include "pairrank/featurizer.hpp"
#include "pairrank/image_features.hpp"
#include "pairrank/pairing.hpp"
#include "pairrank/ranker.hpp"
#include "pairrank/rng.hpp"
#include "pairrank/stats.hpp"
#include "pairrank/synth.hpp"
#include "pairrank/user_features.hpp"
#include "test_util.hpp"

using namespace pairrank;
namespace fs = std::filesystem;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::kPass : Status::kFail, std::move(detail)};
}

// Pairing constraints on generated communities plus exhaustive search on
// small ones.
Outcome pairing_suite() {
  PairConfig cfg;
  std::size_t total_pairs = 0;
  for (int k = 0; k < 10; ++k) {
    auto mc = market_preset("default");
    mc.n_submissions = 5000 + 250 * static_cast<std::size_t>(k);
    mc.duration_days = 1.0 + k % 3;
    mc.community = "community" + std::to_string(k);
    mc.seed = 100 + static_cast<std::uint64_t>(k);
    const auto m = generate(mc);
    const Dataset d(m.submissions, m.comments);
    const auto pairs = sample_pairs(d.submissions(), cfg, static_cast<std::uint64_t>(k));
    if (const auto v = oracle::pair_violation(d.submissions(), pairs, cfg)) {
      return {Status::kFail, mc.community + ": " + *v};
    }
    if (pairs.empty()) return {Status::kFail, mc.community + ": no pairs"};
    total_pairs += pairs.size();
  }
  std::size_t instances = 0, nontrivial = 0;
  for (int k = 0; k < 400; ++k) {
    auto mc = market_preset("default");
    mc.n_submissions = 2 + static_cast<std::size_t>(k) % 11;
    mc.duration_days = 90.0 / kSecondsPerDay;
    // Spread-out scores below the vote ceiling so many candidates qualify.
    mc.sigma_q = 2.5;
    mc.bias = -3.0;
    mc.beta = 0.0;
    mc.seed = 5000 + static_cast<std::uint64_t>(k);
    const auto m = generate(mc);
    const Dataset d(m.submissions, m.comments);
    const auto& subs = d.submissions();
    const auto pairs = sample_pairs(subs, cfg, static_cast<std::uint64_t>(k));
    if (const auto v = oracle::pair_violation(subs, pairs, cfg)) {
      return {Status::kFail, "small instance " + std::to_string(k) + ": " + *v};
    }
    if (oracle::emitted_keys(subs, pairs) != oracle::best_matching_keys(subs, cfg)) {
      return {Status::kFail, "small instance " + std::to_string(k) + " is not gap-minimal"};
    }
    ++instances;
    nontrivial += !pairs.empty();
  }
  return {Status::kPass, fmt("10 communities, %zu pairs; %zu exhaustive instances (%zu with pairs)",
                             total_pairs, instances, nontrivial)};
}

struct MarketRun {
  CVResult cv;
  std::size_t n_pairs;
};

MarketRun cv_run(const Market& m, const Dataset& d, const std::vector<RankedPair>& pairs,
                 const std::string& groups, const TrainConfig& tc, std::size_t splits) {
  FeaturizerOptions fo;
  fo.groups = parse_feature_groups(groups);
  SyntheticImageSource images(m);
  FeatureExtractor ex(d, fo, &images);
  CVOptions co;
  co.n_splits = splits;
  return {cross_validate(pairs, ex, tc, co), pairs.size()};
}

Outcome time_control() {
  const auto m = generate(market_preset("time-control"));
  const Dataset d(m.submissions, m.comments);
  const auto tight = sample_pairs(d.submissions(), PairConfig{}, 1);
  const auto wide = sample_same_day_random_pairs(d.submissions(), PairConfig{}, 1);
  TrainConfig tc;
  tc.hidden_units = 100;
  const auto t = cv_run(m, d, tight, "time", tc, 15);
  const auto w = cv_run(m, d, wide, "time", tc, 15);
  const double ta = 100 * t.cv.mean_accuracy(), te = 100 * t.cv.mean_earlier();
  const double wa = 100 * w.cv.mean_accuracy(), we = 100 * w.cv.mean_earlier();
  const bool ok = tight.size() >= 5000 && wide.size() >= 5000 && ta >= 48 && ta <= 52 && te >= 48 &&
                  te <= 52 && wa >= 65 && we >= 55;
  return verdict(ok, fmt("30s window (%zu pairs): time %.2f%%, earlier %.2f%%; same-day (%zu pairs): "
                         "time %.2f%%, earlier %.2f%%",
                         tight.size(), ta, te, wide.size(), wa, we));
}

Outcome content_recovery() {
  TrainConfig tc;
  std::string detail;
  bool ok = true;
  {
    auto mc = market_preset("content");
    mc.images = false;
    const auto m = generate(mc);
    const Dataset d(m.submissions, m.comments);
    const auto pairs = sample_pairs(d.submissions(), PairConfig{}, 1);
    const double acc = 100 * cv_run(m, d, pairs, "unigram", tc, 15).cv.mean_accuracy();
    ok = ok && acc >= 90;
    detail += fmt("unigram market %.2f%% (%zu pairs)", acc, pairs.size());
  }
  {
    auto mc = market_preset("content");
    mc.planted_tokens = 0;
    mc.token_strength = 0.0;
    const auto m = generate(mc);
    const Dataset d(m.submissions, m.comments);
    const auto pairs = sample_pairs(d.submissions(), PairConfig{}, 1);
    const double acc = 100 * cv_run(m, d, pairs, "color", tc, 15).cv.mean_accuracy();
    ok = ok && acc >= 80;
    detail += fmt("; palette market color %.2f%% (%zu pairs)", acc, pairs.size());
  }
  {
    auto mc = market_preset("content");
    mc.token_strength = 0.6;
    mc.palette_strength = 0.15;
    const auto m = generate(mc);
    const Dataset d(m.submissions, m.comments);
    const auto pairs = sample_pairs(d.submissions(), PairConfig{}, 1);
    const double u = 100 * cv_run(m, d, pairs, "unigram", tc, 15).cv.mean_accuracy();
    const double c = 100 * cv_run(m, d, pairs, "color", tc, 15).cv.mean_accuracy();
    const double both = 100 * cv_run(m, d, pairs, "unigram,color", tc, 15).cv.mean_accuracy();
    ok = ok && both >= std::max(u, c) - 1.0;
    detail += fmt("; combined market unigram %.2f%%, color %.2f%%, both %.2f%%", u, c, both);
  }
  return verdict(ok, detail);
}

Outcome user_features() {
  const auto m = generate(market_preset("user"));
  const Dataset d(m.submissions, m.comments);
  const auto pairs = sample_pairs(d.submissions(), PairConfig{}, 1);
  TrainConfig tc;
  const auto q = cv_run(m, d, pairs, "quality", tc, 15).cv;
  const auto a = cv_run(m, d, pairs, "activity", tc, 15).cv;
  const double qa = 100 * q.mean_accuracy(), aa = 100 * a.mean_accuracy();
  const double ra = 100 * a.mean_random();
  const bool ok = qa > aa && aa > 50.0 && aa > ra;
  return verdict(ok, fmt("%zu pairs, 15 splits: quality %.2f%% > activity %.2f%% > random %.2f%%",
                         pairs.size(), qa, aa, ra));
}

Outcome numerical() {
  std::vector<std::string> failures;
  // Hinge gradients.
  double worst_lin = 0, worst_hid = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 1);
    std::vector<FeaturizedPair> batch;
    for (int i = 0; i < 40; ++i) {
      std::vector<double> a(8), b(8);
      for (auto& x : a) x = rng.normal();
      for (auto& x : b) x = rng.normal();
      batch.push_back({SparseVector::from_dense(a), SparseVector::from_dense(b),
                       rng.coin() ? Label::kAWins : Label::kBWins});
    }
    TrainConfig lin;
    lin.l2 = 0.01;
    lin.seed = seed;
    RankerModel ml(8, Standardizer::fit(batch, 8), lin);
    std::vector<double> w(8);
    for (auto& x : w) x = rng.normal(0, 0.3);
    ml.set_parameters(w);
    worst_lin = std::max(worst_lin, hinge_gradient_check(ml, batch, seed).max_relative_error);
    TrainConfig hid = lin;
    hid.hidden_units = 10;
    const RankerModel mh(8, Standardizer::fit(batch, 8), hid);
    worst_hid = std::max(worst_hid, hinge_gradient_check(mh, batch, seed).max_relative_error);
  }
  if (worst_lin > 1e-4) failures.push_back("linear gradient");
  if (worst_hid > 1e-3) failures.push_back("hidden gradient");

  // Histogram mass.
  double worst_l1 = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> px(NormalizedImage::kBytes);
    const auto levels = 1 + rng.index(256);
    for (auto& v : px) v = static_cast<std::uint8_t>(rng.index(levels));
    double total = 0;
    for (double h : color_histogram(NormalizedImage(px))) total += h;
    worst_l1 = std::max(worst_l1, std::abs(total - 1.0));
  }
  if (worst_l1 > 1e-9) failures.push_back("histogram mass");

  // Random projection distortion.
  const RandomProjection proj(kHogDim, 2048, 11);
  Rng jl_rng(2);
  int good = 0;
  auto norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  for (int t = 0; t < 100; ++t) {
    std::vector<double> diff(kHogDim);
    for (auto& x : diff) x = jl_rng.normal() - jl_rng.normal();
    if (std::abs(norm(proj.project(diff)) / norm(diff) - 1.0) < 0.25) ++good;
  }
  if (good < 95) failures.push_back("projection distortion");

  // Spearman against rank counting.
  double worst_rho = 0;
  Rng sp_rng(3);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 2 + sp_rng.index(19);
    std::vector<double> x(n), y(n);
    const auto levels = 1 + sp_rng.index(n + 2);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(sp_rng.index(levels));
      y[i] = static_cast<double>(sp_rng.index(levels)) + (sp_rng.coin() ? 0.5 * x[i] : 0.0);
    }
    const double expect = oracle::spearman(x, y);
    double got = NAN;
    try {
      got = spearman(x, y);
    } catch (const DataError&) {
      // Undefined for a constant input, as in the oracle.
    }
    if (std::isnan(expect) != std::isnan(got)) {
      worst_rho = INFINITY;
    } else if (!std::isnan(expect)) {
      worst_rho = std::max(worst_rho, std::abs(expect - got));
    }
  }
  if (worst_rho > 1e-12) failures.push_back("spearman");

  // Quality features against a recount.
  Rng kr_rng(21);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto log = oracle::random_history(kr_rng, 1 + kr_rng.index(100), 4);
    const auto h = UserHistory::build(log.subs, log.comments);
    const std::string author = "u" + std::to_string(kr_rng.index(4));
    const Timestamp as_of = 1000 + static_cast<Timestamp>(kr_rng.index(220));
    if (!oracle::same_features(quality_features(h.snapshot(author, as_of)),
                               oracle::quality_recount(log.subs, log.comments, author, as_of))) {
      ++mismatches;
    }
  }
  if (mismatches) failures.push_back("k-rate recount");

  std::string detail = fmt("gradient rel err %.2e linear, %.2e hidden; histogram |L1-1| %.1e; "
                           "projection %d/100; spearman max err %.1e; k-rate mismatches %d/1000",
                           worst_lin, worst_hid, worst_l1, good, worst_rho, mismatches);
  for (const auto& f : failures) detail += "; failed: " + f;
  return verdict(failures.empty(), detail);
}

Outcome determinism() {
  const auto root = test::temp_dir("acceptance_determinism");
  const std::vector<std::string> files{"pairs.csv", "features.txt", "m.model", "m.model.report.txt",
                                       "m.model.records.tsv"};
  std::vector<std::string> first;
  for (int run = 0; run < 2; ++run) {
    const auto dir = root / "run";
    fs::remove_all(dir);
    const auto ds = dir.string();
    const std::vector<std::vector<std::string>> steps{
        {"simulate", "--seed", "7", "--out", ds},
        {"pairs", "--in", ds, "--max-window-secs", "30", "--out", ds + "/pairs.csv"},
        {"featurize", "--in", ds, "--pairs", ds + "/pairs.csv", "--features", "unigram,time", "--out",
         ds + "/features.txt"},
        {"train", "--in", ds, "--pairs", ds + "/pairs.csv", "--features", "unigram", "--out",
         ds + "/m.model"},
        {"evaluate", "--model", ds + "/m.model"}};
    for (const auto& s : steps) {
      std::vector<std::string> argv{"pairrank"};
      argv.insert(argv.end(), s.begin(), s.end());
      if (const int rc = run_cli(argv); rc != 0) {
        return {Status::kFail, s[0] + " exited " + std::to_string(rc)};
      }
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      const auto bytes = test::slurp(dir / files[i]);
      if (bytes.empty()) return {Status::kFail, files[i] + " is empty"};
      if (run == 0) {
        first.push_back(bytes);
      } else if (bytes != first[i]) {
        return {Status::kFail, files[i] + " differs between runs"};
      }
    }
  }
  fs::remove_all(root);
  return {Status::kPass, "pair file, features, model, report and records byte-identical across two runs"};
}

Outcome real_data() {
  const char* env = std::getenv("PAIRRANK_REAL_DATA");
  if (!env) return {Status::kSkip, "set PAIRRANK_REAL_DATA to a directory with pics/, aww/ and FoodPorn/"};
  const fs::path root(env);
  for (const char* c : {"pics", "aww", "FoodPorn"}) {
    if (!fs::exists(root / c / "submissions.jsonl")) {
      return {Status::kSkip, (root / c / "submissions.jsonl").string() + " not found"};
    }
  }
  bool ok = true;
  std::string detail;
  {
    const auto d = Dataset::load(root / "pics");
    const auto st = pair_stats(sample_pairs(d.submissions(), PairConfig{}, 0));
    const double count = static_cast<double>(st.count);
    ok = ok && std::abs(count - 44000) <= 4400 && std::abs(st.median_score_diff - 117) <= 0.2 * 117;
    detail += fmt("pics %zu pairs, median diff %.1f", st.count, st.median_score_diff);
  }
  {
    const auto d = Dataset::load(root / "aww");
    const auto pairs = sample_pairs(d.submissions(), PairConfig{}, 0);
    FeaturizerOptions fo;
    fo.groups = parse_feature_groups("unigram");
    FeatureExtractor ex(d, fo, nullptr);
    const double acc = 100 * cross_validate(pairs, ex, TrainConfig{}, CVOptions{}).mean_accuracy();
    ok = ok && std::abs(acc - 59.7) <= 2.0;
    detail += fmt("; aww unigram %.2f%%", acc);
  }
  {
    const auto d = Dataset::load(root / "FoodPorn");
    const auto mn = mean_normalize(d.submissions(), 3600);
    ok = ok && std::abs(100 * mn.coverage - 44) <= 3;
    detail += fmt("; FoodPorn coverage %.1f%%", 100 * mn.coverage);
  }
  return verdict(ok, detail);
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"pairing-constraints", 60, pairing_suite},
      {"time-control", 300, time_control},
      {"content-recovery", 300, content_recovery},
      {"user-features", 600, user_features},
      {"numerical", 120, numerical},
      {"determinism", 300, determinism},
      {"real-data", 3600, real_data},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status != Status::kSkip && secs > c.budget_seconds) {
      o.status = Status::kFail;
      o.detail += fmt("; over the %.0fs budget", c.budget_seconds);
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    std::printf("%s %s: %s (%.1fs)\n", tag, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.status == Status::kFail;
  }
  return failed ? 1 : 0;
}
