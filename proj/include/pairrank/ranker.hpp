#ifndef PAIRRANK_RANKER_HPP_
#define PAIRRANK_RANKER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pairrank/featurizer.hpp"
#include "pairrank/rng.hpp"
#include "pairrank/sparse.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 30;
  int patience = 5;
  double l1 = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  double margin = 1.0;
  // 0 selects the linear ranker; otherwise a tanh hidden layer of this
  // width feeds a linear output unit.
  int hidden_units = 0;

  void validate() const;  // std::invalid_argument
  bool operator==(const TrainConfig&) const = default;
};

// One training example: slot features and which slot won.
struct FeaturizedPair {
  SparseVector a;
  SparseVector b;
  Label label = Label::kAWins;
};

// Per-feature training statistics. Features with zero spread are dropped
// (inverse scale 0).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_scale;

  static Standardizer fit(std::span<const FeaturizedPair> pairs,
                          std::size_t dim);
  bool operator==(const Standardizer&) const = default;
};

struct PairPrediction {
  Label label = Label::kAWins;
  double margin = 0.0;  // score(a) - score(b)
  bool tie = false;     // margin was exactly zero; label came from the coin
};

struct TrainSummary {
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based; 0 means the initial weights
  double best_validation_accuracy = 0.0;
  std::vector<double> validation_history;  // one entry per epoch
};

class RankerModel {
 public:
  RankerModel() = default;
  // Untrained model with zero weights (linear) or seeded initial weights
  // (hidden layer) over `dim` features.
  RankerModel(std::size_t dim, Standardizer standardizer, TrainConfig cfg);

  std::size_t dim() const { return dim_; }
  bool is_hidden() const { return cfg_.hidden_units > 0; }
  const TrainConfig& config() const { return cfg_; }
  const Standardizer& standardizer() const { return standardizer_; }
  const TrainSummary& summary() const { return summary_; }
  const FittedFeaturizer& featurizer() const { return featurizer_; }
  void set_featurizer(FittedFeaturizer f) { featurizer_ = std::move(f); }

  // Linear: w . standardize(fv). Hidden: v . tanh(W (fv / scale) + b); the
  // hidden bias absorbs centering. Throws std::invalid_argument when fv has
  // an index outside the model space.
  double score(const SparseVector& fv) const;
  PairPrediction predict_pair(const SparseVector& a, const SparseVector& b,
                              Rng& tie_rng) const;

  // Flat parameter vector: linear weights, or W (column-major, dim x H),
  // b, v for the hidden variant.
  const std::vector<double>& parameters() const { return params_; }
  void set_parameters(std::vector<double> p);

  // Mean hinge loss over `pairs` plus the l2 penalty (l1 excluded).
  double smooth_objective(std::span<const FeaturizedPair> pairs) const;
  // Analytic (sub)gradient of smooth_objective.
  std::vector<double> smooth_gradient(std::span<const FeaturizedPair> pairs) const;
  // margin - y * (score(a) - score(b)) for one pair.
  double hinge_argument(const FeaturizedPair& p) const;

  // "format_version: 1" text document; weights printed with 17
  // significant digits.
  std::string serialize() const;
  static RankerModel deserialize(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RankerModel load(const std::filesystem::path& path);

 private:
  friend RankerModel train_pairwise(std::span<const FeaturizedPair>,
                                    std::size_t, const TrainConfig&, double);

  SparseVector scale(const SparseVector& fv) const;
  double raw_score(const SparseVector& z) const;  // no centering offset
  void refresh_offset();
  // target += coef * d(hinge term)/d(params) for one pair; target may alias
  // params_.
  void add_hinge_subgradient(const SparseVector& za, const SparseVector& zb,
                             double y, double coef,
                             std::vector<double>& target) const;

  std::size_t dim_ = 0;
  TrainConfig cfg_;
  Standardizer standardizer_;
  std::vector<double> params_;
  double offset_ = 0.0;  // linear only: w . (mean * inv_scale)
  TrainSummary summary_;
  FittedFeaturizer featurizer_;
};

// Seeded-shuffle SGD on the pairwise hinge loss with elastic-net
// regularization (l1 by per-step soft-thresholding) and early stopping on a
// held-back validation fraction. Returns the best-validation snapshot.
// Throws DataError on empty validation/training splits or a non-finite
// loss.
RankerModel train_pairwise(std::span<const FeaturizedPair> pairs,
                           std::size_t dim, const TrainConfig& cfg,
                           double val_fraction = 0.10);

// Accuracy with exact-zero margins resolved by `tie_rng`.
double pair_accuracy(const RankerModel& model,
                     std::span<const FeaturizedPair> pairs, Rng& tie_rng);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  int resamples = 0;  // parameter perturbations needed to leave hinge kinks
};

// Compares smooth_gradient with central differences (step h) at a point
// at least 1e-3 away from every hinge kink of the batch, perturbing the
// parameters when needed. Throws std::runtime_error if no such point is
// found.
GradientCheckResult hinge_gradient_check(const RankerModel& model,
                                         std::span<const FeaturizedPair> batch,
                                         std::uint64_t seed, double h = 1e-5);

}  // namespace pairrank

#endif  // PAIRRANK_RANKER_HPP_
