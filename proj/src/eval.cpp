#include "pairrank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <openssl/evp.h>

#include "pairrank/error.hpp"
#include "pairrank/stats.hpp"
#include "pairrank/time_features.hpp"

namespace pairrank {
namespace {

constexpr std::size_t kMinPairs = 50;

std::string fmt(double v, int precision = 4) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

std::vector<double> CVResult::accuracies() const {
  std::vector<double> a;
  for (const auto& s : splits) a.push_back(s.accuracy);
  return a;
}

double CVResult::mean_accuracy() const { return mean(accuracies()); }

double CVResult::ci_half_width() const {
  return t_confidence_half_width(accuracies());
}

double CVResult::mean_earlier() const {
  std::vector<double> a;
  for (const auto& s : splits) a.push_back(s.earlier_accuracy);
  return mean(a);
}

double CVResult::mean_random() const {
  std::vector<double> a;
  for (const auto& s : splits) a.push_back(s.random_accuracy);
  return mean(a);
}

double CVResult::mean_spearman() const {
  std::vector<double> a;
  for (const auto& s : splits) {
    if (!std::isnan(s.spearman)) a.push_back(s.spearman);
  }
  return a.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(a);
}

std::vector<std::size_t> split_test_indices(std::size_t n_pairs,
                                            const CVOptions& opts,
                                            std::size_t k) {
  std::vector<std::size_t> idx(n_pairs);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(mix64(opts.seed, 0xc0ffee, k));
  rng.shuffle(idx);
  const auto n_test = static_cast<std::size_t>(
      std::llround(opts.test_fraction * static_cast<double>(n_pairs)));
  idx.resize(std::min(n_test, n_pairs));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::string> pair_member_ids(std::span<const RankedPair> pairs) {
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto& p : pairs) {
    for (const auto* id : {&p.id_a, &p.id_b}) {
      if (seen.insert(*id).second) ids.push_back(*id);
    }
  }
  return ids;
}

std::vector<FeaturizedPair> featurize_pairs(const FittedFeaturizer& f,
                                            const FeatureExtractor& extractor,
                                            std::span<const RankedPair> pairs) {
  std::vector<FeaturizedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto& ra = extractor.raw(p.id_a);
    const auto& rb = extractor.raw(p.id_b);
    out.push_back({f.vectorize(ra, rb), f.vectorize(rb, ra), p.label});
  }
  return out;
}

RankerModel train_on_pairs(FeatureExtractor& extractor,
                           std::span<const RankedPair> pairs,
                           const TrainConfig& cfg, double val_fraction) {
  const auto ids = pair_member_ids(pairs);
  extractor.prepare(ids);
  auto fitted = FittedFeaturizer::fit(extractor, ids);
  const auto featurized = featurize_pairs(fitted, extractor, pairs);
  RankerModel model =
      train_pairwise(featurized, fitted.space().dim(), cfg, val_fraction);
  model.set_featurizer(std::move(fitted));
  return model;
}

double earlier_accuracy(std::span<const RankedPair> pairs, const Dataset& data,
                        std::uint64_t seed) {
  if (pairs.empty()) return 0.0;
  Rng tie(mix64(seed, 0xea41));
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    const Label guess = earlier_baseline(data.at(p.id_a).created_utc,
                                         data.at(p.id_b).created_utc, tie);
    if (guess == p.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

CVResult cross_validate(std::span<const RankedPair> pairs,
                        FeatureExtractor& extractor, const TrainConfig& cfg,
                        const CVOptions& opts) {
  if (pairs.size() < kMinPairs) {
    throw DataError("cross validation needs at least " +
                    std::to_string(kMinPairs) + " pairs, got " +
                    std::to_string(pairs.size()));
  }
  if (!(opts.test_fraction > 0 && opts.test_fraction < 1)) {
    throw std::invalid_argument("test_fraction must be in (0, 1)");
  }
  extractor.prepare(pair_member_ids(pairs));

  CVResult result;
  for (const auto& g : extractor.options().groups) {
    if (!result.name.empty()) result.name += ',';
    result.name += g;
  }
  for (std::size_t k = 0; k < opts.n_splits; ++k) {
    const auto test_idx = split_test_indices(pairs.size(), opts, k);
    std::vector<bool> is_test(pairs.size(), false);
    for (auto i : test_idx) is_test[i] = true;
    std::vector<RankedPair> train, test;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      (is_test[i] ? test : train).push_back(pairs[i]);
    }

    TrainConfig split_cfg = cfg;
    split_cfg.seed = mix64(cfg.seed, k);
    const RankerModel model =
        train_on_pairs(extractor, train, split_cfg, opts.val_fraction);
    const auto& fitted = model.featurizer();
    const auto test_f = featurize_pairs(fitted, extractor, test);

    SplitResult s;
    s.n_train = train.size();
    s.n_test = test.size();
    Rng tie(mix64(opts.seed, 0x7e57, k));
    s.accuracy = pair_accuracy(model, test_f, tie);
    s.earlier_accuracy =
        earlier_accuracy(test, extractor.dataset(), mix64(opts.seed, k));
    Rng coin(mix64(opts.seed, 0xc01, k));
    std::size_t random_correct = 0;
    for (const auto& p : test) {
      if ((coin.coin() ? Label::kAWins : Label::kBWins) == p.label) {
        ++random_correct;
      }
    }
    s.random_accuracy =
        test.empty() ? 0.0 : double(random_correct) / double(test.size());

    std::vector<double> model_scores, raw_scores;
    for (const auto& id : pair_member_ids(test)) {
      model_scores.push_back(model.score(fitted.vectorize(extractor.raw(id))));
      raw_scores.push_back(
          static_cast<double>(extractor.dataset().at(id).score));
    }
    try {
      s.spearman = spearman(model_scores, raw_scores);
    } catch (const DataError&) {
      s.spearman = std::numeric_limits<double>::quiet_NaN();
    }
    result.splits.push_back(s);
  }
  return result;
}

void CVReport::write_table(std::ostream& out) const {
  int width = 8;
  for (const auto& r : rows) width = std::max(width, static_cast<int>(r.name.size()));
  char line[512];
  std::snprintf(line, sizeof line, "%-*s  %8s  %6s  %8s  %8s  %8s  %6s\n", width, "features",
                "mean_acc", "ci95", "earlier", "random", "spearman", "splits");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-*s  %8s  %6s  %8s  %8s  %8s  %6zu\n", width,
                  r.name.c_str(), fmt(100 * r.mean_accuracy(), 2).c_str(),
                  fmt(100 * r.ci_half_width(), 2).c_str(),
                  fmt(100 * r.mean_earlier(), 2).c_str(),
                  fmt(100 * r.mean_random(), 2).c_str(),
                  fmt(r.mean_spearman(), 3).c_str(), r.splits.size());
    out << line;
  }
}

void CVReport::write_records(std::ostream& out) const {
  auto row = [&](const std::string& kind, const std::string& name,
                 const std::vector<double>& values, double m, double ci) {
    out << kind << '\t' << name << '\t' << fmt(m, 6) << '\t' << fmt(ci, 6);
    for (double v : values) out << '\t' << fmt(v, 6);
    out << '\n';
  };
  for (const auto& r : rows) {
    row("model", r.name, r.accuracies(), r.mean_accuracy(), r.ci_half_width());
    std::vector<double> e, rnd, sp;
    for (const auto& s : r.splits) {
      e.push_back(s.earlier_accuracy);
      rnd.push_back(s.random_accuracy);
      sp.push_back(s.spearman);
    }
    row("earlier", r.name, e, mean(e), t_confidence_half_width(e));
    row("random", r.name, rnd, mean(rnd), t_confidence_half_width(rnd));
    row("spearman", r.name, sp, r.mean_spearman(),
        std::numeric_limits<double>::quiet_NaN());
  }
}

double heldout_accuracy(const RankerModel& model, FeatureExtractor& extractor,
                        std::span<const RankedPair> pairs, std::uint64_t seed) {
  extractor.prepare(pair_member_ids(pairs));
  const auto featurized = featurize_pairs(model.featurizer(), extractor, pairs);
  Rng tie(mix64(seed, 0x4e1d));
  return pair_accuracy(model, featurized, tie);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) !=
      1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

bool EvaluationLedger::contains(const std::string& model_digest,
                                const std::string& pairs_digest) const {
  std::ifstream in(path_);
  std::string line;
  const std::string key = model_digest + '\t' + pairs_digest;
  while (std::getline(in, line)) {
    if (line.rfind(key, 0) == 0) return true;
  }
  return false;
}

void EvaluationLedger::record(const std::string& model_digest,
                              const std::string& pairs_digest, bool force) {
  const bool seen = contains(model_digest, pairs_digest);
  if (seen && !force) {
    throw std::runtime_error(
        "this model was already evaluated on this pair file (use --force to "
        "repeat)");
  }
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path_.string());
  out << model_digest << '\t' << pairs_digest << '\t'
      << (seen ? "forced" : "first") << '\n';
  out.flush();
}

}  // namespace pairrank
