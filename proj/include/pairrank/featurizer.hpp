#ifndef PAIRRANK_FEATURIZER_HPP_
#define PAIRRANK_FEATURIZER_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pairrank/dataset.hpp"
#include "pairrank/image_features.hpp"
#include "pairrank/sparse.hpp"
#include "pairrank/text_features.hpp"
#include "pairrank/time_features.hpp"
#include "pairrank/types.hpp"
#include "pairrank/user_features.hpp"

namespace pairrank {

// Group names: structural, unigram, color, hog, activity, type, quality,
// time, embedding:NAME. "user" expands to activity,type,quality and "text"
// to structural,unigram.
struct FeaturizerOptions {
  std::vector<std::string> groups;
  int min_df = 5;
  bool unigram_counts = false;  // presence indicators unless set
  std::size_t hog_dim = 2048;
  std::uint64_t projection_seed = 0;
  bool quality_indices = true;  // false keeps only the k-rates

  bool operator==(const FeaturizerOptions&) const = default;
};

// Parses "a,b,c" and expands aliases; throws UsageError on unknown names.
std::vector<std::string> parse_feature_groups(const std::string& list);

// Split-independent per-submission features.
struct RawFeatures {
  Timestamp created_utc = 0;
  std::vector<std::string> tokens;
  std::array<double, kStructuralDim> structural{};
  std::vector<double> color;  // empty unless requested
  std::vector<double> hog;    // projected
  std::vector<double> user;   // activity ++ type ++ quality, NaN = missing
  std::map<std::string, const std::vector<double>*> embeddings;
};

// Computes and caches RawFeatures for the submissions of a dataset.
class FeatureExtractor {
 public:
  FeatureExtractor(const Dataset& data, FeaturizerOptions opts,
                   const ImageSource* images = nullptr,
                   const std::vector<EmbeddingTable>* embeddings = nullptr);

  const FeaturizerOptions& options() const { return opts_; }
  const Dataset& dataset() const { return data_; }

  // Computes anything missing for `ids`. Throws DataError for unknown ids,
  // missing images or missing embedding rows.
  void prepare(std::span<const std::string> ids);
  const RawFeatures& raw(const std::string& id) const;
  std::size_t embedding_dim(const std::string& name) const;

 private:
  bool wants(const std::string& group) const;

  const Dataset& data_;
  FeaturizerOptions opts_;
  const ImageSource* images_;
  const std::vector<EmbeddingTable>* embeddings_;
  std::unique_ptr<UserHistory> history_;
  std::unique_ptr<RandomProjection> projection_;
  std::unordered_map<std::string, RawFeatures> cache_;
};

// Split-dependent state: vocabulary, year range and imputation means, all
// fitted on training submissions only.
class FittedFeaturizer {
 public:
  FittedFeaturizer() = default;

  static FittedFeaturizer fit(const FeatureExtractor& extractor,
                              std::span<const std::string> training_ids);

  const FeatureSpace& space() const { return space_; }
  const FeaturizerOptions& options() const { return opts_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const YearRange& years() const { return years_; }
  const ImputationMeans& user_means() const { return user_means_; }

  // Features of `self` when paired against `other`; only the time group
  // depends on the partner.
  SparseVector vectorize(const RawFeatures& self, const RawFeatures& other) const;
  // Unpaired view: the item is its own partner.
  SparseVector vectorize(const RawFeatures& self) const {
    return vectorize(self, self);
  }

  nlohmann::ordered_json to_json() const;
  static FittedFeaturizer from_json(const nlohmann::json& j);

  bool operator==(const FittedFeaturizer& o) const;

 private:
  FeaturizerOptions opts_;
  FeatureSpace space_;
  Vocabulary vocab_;
  YearRange years_;
  ImputationMeans user_means_;
  std::map<std::string, std::size_t> embedding_dims_;
};

// Indices of the user block that survive options.quality_indices.
std::vector<std::size_t> user_columns(const std::vector<std::string>& groups,
                                      bool quality_indices);

}  // namespace pairrank

#endif  // PAIRRANK_FEATURIZER_HPP_
