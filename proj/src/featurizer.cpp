#include "pairrank/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pairrank/error.hpp"

namespace pairrank {
namespace {

constexpr const char* kEmbeddingPrefix = "embedding:";

const std::vector<std::string>& base_groups() {
  static const std::vector<std::string> g = {
      "structural", "unigram", "color",   "hog",
      "activity",   "type",    "quality", "time"};
  return g;
}

bool is_embedding(const std::string& g) {
  return g.rfind(kEmbeddingPrefix, 0) == 0;
}

std::string embedding_name(const std::string& g) {
  return g.substr(std::char_traits<char>::length(kEmbeddingPrefix));
}

// Column ranges of the raw user vector.
constexpr std::size_t kActivityBegin = 0;
constexpr std::size_t kTypeBegin = kActivityDim;
constexpr std::size_t kQualityBegin = kActivityDim + kTypeDim;
constexpr std::size_t kUserDim = kActivityDim + kTypeDim + kQualityDim;

std::vector<std::size_t> group_user_columns(const std::string& g,
                                            bool quality_indices) {
  std::vector<std::size_t> cols;
  if (g == "activity") {
    for (std::size_t i = 0; i < kActivityDim; ++i) cols.push_back(kActivityBegin + i);
  } else if (g == "type") {
    for (std::size_t i = 0; i < kTypeDim; ++i) cols.push_back(kTypeBegin + i);
  } else if (g == "quality") {
    for (std::size_t i = 0; i < kQualityDim; ++i) {
      const bool is_index = (i % 8) < 4;
      if (quality_indices || !is_index) cols.push_back(kQualityBegin + i);
    }
  }
  return cols;
}

bool is_user_group(const std::string& g) {
  return g == "activity" || g == "type" || g == "quality";
}

void push_dense(SparseVector& out, std::size_t offset,
                std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) {
      out.push(static_cast<std::uint32_t>(offset + i), values[i]);
    }
  }
}

nlohmann::json nan_to_null(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

}  // namespace

std::vector<std::string> parse_feature_groups(const std::string& list) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& g) {
    if (seen.insert(g).second) out.push_back(g);
  };
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    std::string name = list.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    start = comma == std::string::npos ? list.size() + 1 : comma + 1;
    name.erase(0, name.find_first_not_of(" \t"));
    name.erase(name.find_last_not_of(" \t") + 1);
    if (name.empty()) continue;
    if (name == "user") {
      add("activity");
      add("type");
      add("quality");
    } else if (name == "text") {
      add("structural");
      add("unigram");
    } else if (is_embedding(name) && name.size() > 10) {
      add(name);
    } else if (std::find(base_groups().begin(), base_groups().end(), name) !=
               base_groups().end()) {
      add(name);
    } else {
      throw UsageError("unknown feature group '" + name + "'");
    }
  }
  if (out.empty()) throw UsageError("no feature groups given");
  return out;
}

std::vector<std::size_t> user_columns(const std::vector<std::string>& groups,
                                      bool quality_indices) {
  std::vector<std::size_t> cols;
  for (const auto& g : groups) {
    const auto c = group_user_columns(g, quality_indices);
    cols.insert(cols.end(), c.begin(), c.end());
  }
  return cols;
}

FeatureExtractor::FeatureExtractor(const Dataset& data, FeaturizerOptions opts,
                                   const ImageSource* images,
                                   const std::vector<EmbeddingTable>* embeddings)
    : data_(data),
      opts_(std::move(opts)),
      images_(images),
      embeddings_(embeddings) {
  for (const auto& g : opts_.groups) {
    if (!is_embedding(g)) continue;
    if (embeddings_ == nullptr || embedding_dim(embedding_name(g)) == 0) {
      throw UsageError("feature group '" + g + "' has no embedding table");
    }
  }
  if ((wants("color") || wants("hog")) && images_ == nullptr) {
    throw UsageError("image feature groups need an image source");
  }
  if (wants("activity") || wants("type") || wants("quality")) {
    history_ = std::make_unique<UserHistory>(
        UserHistory::build(data_.submissions(), data_.comments()));
  }
  if (wants("hog")) {
    projection_ = std::make_unique<RandomProjection>(kHogDim, opts_.hog_dim,
                                                     opts_.projection_seed);
  }
}

bool FeatureExtractor::wants(const std::string& group) const {
  return std::find(opts_.groups.begin(), opts_.groups.end(), group) !=
         opts_.groups.end();
}

std::size_t FeatureExtractor::embedding_dim(const std::string& name) const {
  if (embeddings_ == nullptr) return 0;
  for (const auto& t : *embeddings_) {
    if (t.name == name) return t.dim;
  }
  return 0;
}

void FeatureExtractor::prepare(std::span<const std::string> ids) {
  for (const auto& id : ids) {
    if (cache_.contains(id)) continue;
    const Submission& s = data_.at(id);
    RawFeatures r;
    r.created_utc = s.created_utc;
    r.tokens = tokenize(s.title);
    r.structural = structural_features(s.title);
    if (wants("color") || wants("hog")) {
      auto img = images_->image_for(s);
      if (!img) throw DataError("no usable image for submission '" + id + "'");
      if (wants("color")) {
        const auto h = color_histogram(*img);
        r.color.assign(h.begin(), h.end());
      }
      if (wants("hog")) r.hog = projection_->project(hog_features(*img));
    }
    if (history_) {
      const auto snap = history_->snapshot(s.author, s.created_utc);
      const auto a = activity_features(snap);
      const auto t = type_features(snap);
      const auto q = quality_features(snap);
      r.user.insert(r.user.end(), a.begin(), a.end());
      r.user.insert(r.user.end(), t.begin(), t.end());
      r.user.insert(r.user.end(), q.begin(), q.end());
    }
    for (const auto& g : opts_.groups) {
      if (!is_embedding(g)) continue;
      const std::string name = embedding_name(g);
      for (const auto& table : *embeddings_) {
        if (table.name != name) continue;
        const auto* v = table.find(id);
        if (!v) {
          throw DataError("embedding '" + name + "' has no row for '" + id +
                          "'");
        }
        r.embeddings[name] = v;
      }
    }
    cache_.emplace(id, std::move(r));
  }
}

const RawFeatures& FeatureExtractor::raw(const std::string& id) const {
  auto it = cache_.find(id);
  if (it == cache_.end()) {
    throw std::logic_error("features for '" + id + "' were not prepared");
  }
  return it->second;
}

FittedFeaturizer FittedFeaturizer::fit(
    const FeatureExtractor& extractor,
    std::span<const std::string> training_ids) {
  if (training_ids.empty()) throw DataError("featurizer fit on an empty split");
  FittedFeaturizer f;
  f.opts_ = extractor.options();
  const auto& groups = f.opts_.groups;
  auto wants = [&](const std::string& g) {
    return std::find(groups.begin(), groups.end(), g) != groups.end();
  };

  if (wants("unigram")) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(training_ids.size());
    for (const auto& id : training_ids) docs.push_back(extractor.raw(id).tokens);
    f.vocab_ = build_vocab_tokens(docs, f.opts_.min_df);
  }
  if (wants("time")) {
    std::vector<Timestamp> times;
    for (const auto& id : training_ids) {
      times.push_back(extractor.raw(id).created_utc);
    }
    f.years_ = year_range_of(times);
  }
  if (wants("activity") || wants("type") || wants("quality")) {
    std::vector<std::vector<double>> rows;
    rows.reserve(training_ids.size());
    for (const auto& id : training_ids) rows.push_back(extractor.raw(id).user);
    f.user_means_ = fit_imputation(rows, kUserDim);
    for (auto col : user_columns(groups, f.opts_.quality_indices)) {
      if (is_sentinel(f.user_means_.means[col])) {
        throw DataError("user feature column " + std::to_string(col) +
                        " is undefined for every training submission");
      }
    }
  }

  for (const auto& g : groups) {
    std::size_t dim = 0;
    if (g == "structural") {
      dim = kStructuralDim;
    } else if (g == "unigram") {
      dim = f.vocab_.size();
    } else if (g == "color") {
      dim = ColorPalette::kSize;
    } else if (g == "hog") {
      dim = f.opts_.hog_dim;
    } else if (is_user_group(g)) {
      dim = group_user_columns(g, f.opts_.quality_indices).size();
    } else if (g == "time") {
      dim = 2 * TimeEncoding::dim(f.years_);
    } else if (is_embedding(g)) {
      dim = extractor.embedding_dim(embedding_name(g));
      f.embedding_dims_[embedding_name(g)] = dim;
    }
    f.space_.add(g, dim);
  }
  return f;
}

SparseVector FittedFeaturizer::vectorize(const RawFeatures& self,
                                         const RawFeatures& other) const {
  SparseVector out;
  std::vector<double> imputed;
  for (const auto& group : space_.groups()) {
    const auto& g = group.name;
    const std::size_t off = group.offset;
    if (g == "structural") {
      push_dense(out, off, self.structural);
    } else if (g == "unigram") {
      if (opts_.unigram_counts) {
        std::map<int, double> counts;
        for (const auto& t : self.tokens) {
          const int i = vocab_.index_of(t);
          if (i >= 0) counts[i] += 1.0;
        }
        for (const auto& [i, c] : counts) {
          out.push(static_cast<std::uint32_t>(off + i), c);
        }
      } else {
        out.append_shifted(unigram_features_tokens(self.tokens, vocab_),
                           static_cast<std::uint32_t>(off));
      }
    } else if (g == "color") {
      push_dense(out, off, self.color);
    } else if (g == "hog") {
      push_dense(out, off, self.hog);
    } else if (is_user_group(g)) {
      if (imputed.empty()) imputed = impute(self.user, user_means_);
      std::size_t k = 0;
      for (auto col : group_user_columns(g, opts_.quality_indices)) {
        if (imputed[col] != 0.0) {
          out.push(static_cast<std::uint32_t>(off + k), imputed[col]);
        }
        ++k;
      }
    } else if (g == "time") {
      out.append_shifted(
          pair_time_features(self.created_utc, other.created_utc, years_),
          static_cast<std::uint32_t>(off));
    } else if (is_embedding(g)) {
      auto it = self.embeddings.find(embedding_name(g));
      if (it == self.embeddings.end()) {
        throw DataError("missing embedding '" + embedding_name(g) + "'");
      }
      push_dense(out, off, *it->second);
    }
  }
  return out;
}

nlohmann::ordered_json FittedFeaturizer::to_json() const {
  nlohmann::ordered_json j;
  j["groups"] = opts_.groups;
  j["min_df"] = opts_.min_df;
  j["unigram_counts"] = opts_.unigram_counts;
  j["hog_dim"] = opts_.hog_dim;
  j["projection_seed"] = opts_.projection_seed;
  j["quality_indices"] = opts_.quality_indices;
  nlohmann::ordered_json space = nlohmann::ordered_json::array();
  for (const auto& g : space_.groups()) {
    space.push_back({{"name", g.name}, {"offset", g.offset}, {"dim", g.dim}});
  }
  j["feature_space"] = space;
  j["vocabulary"] = vocab_.tokens();
  j["years"] = {years_.min_year, years_.max_year};
  nlohmann::json means = nlohmann::json::array();
  for (double m : user_means_.means) means.push_back(nan_to_null(m));
  j["imputation_means"] = means;
  j["embedding_dims"] = embedding_dims_;
  return j;
}

FittedFeaturizer FittedFeaturizer::from_json(const nlohmann::json& j) {
  FittedFeaturizer f;
  try {
    f.opts_.groups = j.at("groups").get<std::vector<std::string>>();
    f.opts_.min_df = j.at("min_df").get<int>();
    f.opts_.unigram_counts = j.at("unigram_counts").get<bool>();
    f.opts_.hog_dim = j.at("hog_dim").get<std::size_t>();
    f.opts_.projection_seed = j.at("projection_seed").get<std::uint64_t>();
    f.opts_.quality_indices = j.at("quality_indices").get<bool>();
    f.vocab_ = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>(),
                          f.opts_.min_df);
    f.years_ = {j.at("years").at(0).get<int>(), j.at("years").at(1).get<int>()};
    for (const auto& m : j.at("imputation_means")) {
      f.user_means_.means.push_back(m.is_null() ? kImputeSentinel
                                                : m.get<double>());
    }
    f.embedding_dims_ =
        j.at("embedding_dims").get<std::map<std::string, std::size_t>>();
    for (const auto& g : j.at("feature_space")) {
      f.space_.add(g.at("name").get<std::string>(), g.at("dim").get<std::size_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model featurizer section: ") + e.what());
  }
  return f;
}

bool FittedFeaturizer::operator==(const FittedFeaturizer& o) const {
  if (!(opts_ == o.opts_ && space_ == o.space_ && vocab_ == o.vocab_ &&
        years_ == o.years_ && embedding_dims_ == o.embedding_dims_ &&
        user_means_.means.size() == o.user_means_.means.size())) {
    return false;
  }
  for (std::size_t i = 0; i < user_means_.means.size(); ++i) {
    const double a = user_means_.means[i];
    const double b = o.user_means_.means[i];
    if (!(a == b || (std::isnan(a) && std::isnan(b)))) return false;
  }
  return true;
}

}  // namespace pairrank
