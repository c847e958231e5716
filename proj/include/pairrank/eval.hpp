#ifndef PAIRRANK_EVAL_HPP_
#define PAIRRANK_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pairrank/featurizer.hpp"
#include "pairrank/ranker.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

struct CVOptions {
  std::size_t n_splits = 15;
  double test_fraction = 0.20;
  double val_fraction = 0.10;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
  double earlier_accuracy = 0.0;
  double random_accuracy = 0.0;
  // Spearman between model scores and raw scores over the test
  // submissions; NaN when undefined.
  double spearman = 0.0;
};

struct CVResult {
  std::string name;  // feature groups, comma-joined
  std::vector<SplitResult> splits;

  std::vector<double> accuracies() const;
  double mean_accuracy() const;
  double ci_half_width() const;  // Student-t, 95%
  double mean_earlier() const;
  double mean_random() const;
  double mean_spearman() const;  // over splits where it is defined
};

// Test-set indices of split `k`: a pure function of (seed, k).
std::vector<std::size_t> split_test_indices(std::size_t n_pairs,
                                            const CVOptions& opts,
                                            std::size_t k);

// Featurizes both slots of every pair with a featurizer fitted on
// `fit_ids`. The extractor must have every id prepared.
std::vector<FeaturizedPair> featurize_pairs(const FittedFeaturizer& f,
                                            const FeatureExtractor& extractor,
                                            std::span<const RankedPair> pairs);

// Distinct submission ids referenced by the pairs, in first-seen order.
std::vector<std::string> pair_member_ids(std::span<const RankedPair> pairs);

// Fits featurizer and ranker on `pairs`; the model carries its featurizer.
RankerModel train_on_pairs(FeatureExtractor& extractor,
                           std::span<const RankedPair> pairs,
                           const TrainConfig& cfg, double val_fraction = 0.10);

// Repeated random train/test partitions of the pairs; every split refits
// the featurizer on its training members. Throws DataError for fewer than
// 50 pairs.
CVResult cross_validate(std::span<const RankedPair> pairs,
                        FeatureExtractor& extractor, const TrainConfig& cfg,
                        const CVOptions& opts = {});

// Earlier-posted-wins accuracy with seeded coin flips on exact ties.
double earlier_accuracy(std::span<const RankedPair> pairs, const Dataset& data,
                        std::uint64_t seed);

struct CVReport {
  std::vector<CVResult> rows;

  // Human-readable table.
  void write_table(std::ostream& out) const;
  // Tab-separated records: kind, name, mean, ci95, then one column per
  // split.
  void write_records(std::ostream& out) const;
};

// Accuracy of a trained model on pairs (typically from a later period).
double heldout_accuracy(const RankerModel& model, FeatureExtractor& extractor,
                        std::span<const RankedPair> pairs, std::uint64_t seed);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string file_sha256(const std::filesystem::path& path);

// Append-only record of (model digest, pair-file digest) evaluations.
class EvaluationLedger {
 public:
  explicit EvaluationLedger(std::filesystem::path path)
      : path_(std::move(path)) {}

  bool contains(const std::string& model_digest,
                const std::string& pairs_digest) const;
  // Throws std::runtime_error ("already evaluated") when the entry exists
  // and force is false; otherwise appends it.
  void record(const std::string& model_digest, const std::string& pairs_digest,
              bool force);

 private:
  std::filesystem::path path_;
};

}  // namespace pairrank

#endif  // PAIRRANK_EVAL_HPP_
