#include "pairrank/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pairrank/error.hpp"

namespace pairrank {
namespace {

constexpr int kFormatVersion = 1;

void append_number_array(std::string& out, const char* key,
                         const std::vector<double>& values) {
  out += ",\n\"";
  out += key;
  out += "\": [";
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    if (i) out += ',';
    out += buf;
  }
  out += ']';
}

std::vector<double> read_number_array(const nlohmann::json& j, const char* key) {
  std::vector<double> v;
  for (const auto& x : j.at(key)) v.push_back(x.get<double>());
  return v;
}

nlohmann::ordered_json config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"patience", c.patience},           {"l1", c.l1},
          {"l2", c.l2},                       {"seed", c.seed},
          {"margin", c.margin},               {"hidden_units", c.hidden_units}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.l1 = j.at("l1").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.margin = j.at("margin").get<double>();
  c.hidden_units = j.at("hidden_units").get<int>();
  return c;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(margin > 0)) throw std::invalid_argument("margin must be > 0");
  if (l1 < 0 || l2 < 0) throw std::invalid_argument("l1/l2 must be >= 0");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (hidden_units < 0) throw std::invalid_argument("hidden_units must be >= 0");
}

Standardizer Standardizer::fit(std::span<const FeaturizedPair> pairs,
                               std::size_t dim) {
  std::vector<double> sum(dim, 0.0), sum2(dim, 0.0);
  for (const auto& p : pairs) {
    for (const auto* v : {&p.a, &p.b}) {
      for (const auto& [i, x] : v->entries) {
        if (i >= dim) throw std::invalid_argument("feature index out of range");
        sum[i] += x;
        sum2[i] += x * x;
      }
    }
  }
  const double n = 2.0 * static_cast<double>(pairs.size());
  Standardizer s;
  s.mean.resize(dim);
  s.inv_scale.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double m = n > 0 ? sum[i] / n : 0.0;
    const double var = n > 0 ? std::max(0.0, sum2[i] / n - m * m) : 0.0;
    const double sd = std::sqrt(var);
    s.mean[i] = m;
    s.inv_scale[i] = sd > 1e-12 * std::max(1.0, std::abs(m)) ? 1.0 / sd : 0.0;
  }
  return s;
}

RankerModel::RankerModel(std::size_t dim, Standardizer standardizer,
                         TrainConfig cfg)
    : dim_(dim), cfg_(cfg), standardizer_(std::move(standardizer)) {
  cfg_.validate();
  if (standardizer_.mean.size() != dim || standardizer_.inv_scale.size() != dim) {
    throw std::invalid_argument("standardizer dimension mismatch");
  }
  if (!is_hidden()) {
    params_.assign(dim, 0.0);
  } else {
    const std::size_t h = static_cast<std::size_t>(cfg_.hidden_units);
    params_.assign(dim * h + 2 * h, 0.0);
    Rng rng(mix64(cfg_.seed, 0x1417));
    for (std::size_t i = 0; i < dim * h; ++i) params_[i] = rng.normal(0.0, 0.1);
    for (std::size_t k = 0; k < h; ++k) {
      params_[dim * h + h + k] = rng.normal(0.0, 1.0 / std::sqrt(double(h)));
    }
  }
  refresh_offset();
}

void RankerModel::set_parameters(std::vector<double> p) {
  if (p.size() != params_.size()) {
    throw std::invalid_argument("parameter vector has the wrong size");
  }
  params_ = std::move(p);
  refresh_offset();
}

void RankerModel::refresh_offset() {
  offset_ = 0.0;
  if (is_hidden()) return;
  for (std::size_t j = 0; j < dim_; ++j) {
    offset_ += params_[j] * standardizer_.mean[j] * standardizer_.inv_scale[j];
  }
}

SparseVector RankerModel::scale(const SparseVector& fv) const {
  SparseVector z;
  z.entries.reserve(fv.nnz());
  for (const auto& [i, x] : fv.entries) {
    if (i >= dim_) {
      throw std::invalid_argument("feature index " + std::to_string(i) +
                                  " outside model dimension " +
                                  std::to_string(dim_));
    }
    const double s = standardizer_.inv_scale[i];
    if (s != 0.0) z.push(i, x * s);
  }
  return z;
}

double RankerModel::raw_score(const SparseVector& z) const {
  if (!is_hidden()) return z.dot(params_);
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden_units);
  const double* b = &params_[dim_ * h];
  const double* v = b + h;
  std::vector<double> act(b, b + h);
  for (const auto& [j, x] : z.entries) {
    const double* w = &params_[j * h];
    for (std::size_t k = 0; k < h; ++k) act[k] += w[k] * x;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < h; ++k) s += v[k] * std::tanh(act[k]);
  return s;
}

double RankerModel::score(const SparseVector& fv) const {
  return raw_score(scale(fv)) - offset_;
}

PairPrediction RankerModel::predict_pair(const SparseVector& a,
                                         const SparseVector& b,
                                         Rng& tie_rng) const {
  PairPrediction p;
  p.margin = score(a) - score(b);
  if (p.margin > 0) {
    p.label = Label::kAWins;
  } else if (p.margin < 0) {
    p.label = Label::kBWins;
  } else {
    p.tie = true;
    p.label = tie_rng.coin() ? Label::kAWins : Label::kBWins;
  }
  return p;
}

void RankerModel::add_hinge_subgradient(const SparseVector& za,
                                        const SparseVector& zb, double y,
                                        double coef,
                                        std::vector<double>& target) const {
  if (!is_hidden()) {
    const double s = za.dot(params_) - zb.dot(params_);
    if (cfg_.margin - y * s <= 0) return;
    const double c = -coef * y;
    for (const auto& [j, x] : za.entries) target[j] += c * x;
    for (const auto& [j, x] : zb.entries) target[j] -= c * x;
    return;
  }
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden_units);
  const double* b = &params_[dim_ * h];
  const double* v = b + h;
  auto forward = [&](const SparseVector& z) {
    std::vector<double> act(b, b + h);
    for (const auto& [j, x] : z.entries) {
      const double* w = &params_[j * h];
      for (std::size_t k = 0; k < h; ++k) act[k] += w[k] * x;
    }
    for (auto& a : act) a = std::tanh(a);
    return act;
  };
  const auto ha = forward(za);
  const auto hb = forward(zb);
  double s = 0.0;
  for (std::size_t k = 0; k < h; ++k) s += v[k] * (ha[k] - hb[k]);
  if (cfg_.margin - y * s <= 0) return;
  const double c = -coef * y;
  std::vector<double> da(h), db(h);
  for (std::size_t k = 0; k < h; ++k) {
    da[k] = v[k] * (1.0 - ha[k] * ha[k]);
    db[k] = v[k] * (1.0 - hb[k] * hb[k]);
  }
  double* tb = &target[dim_ * h];
  double* tv = tb + h;
  for (std::size_t k = 0; k < h; ++k) {
    tv[k] += c * (ha[k] - hb[k]);
    tb[k] += c * (da[k] - db[k]);
  }
  for (const auto& [j, x] : za.entries) {
    double* tw = &target[j * h];
    for (std::size_t k = 0; k < h; ++k) tw[k] += c * x * da[k];
  }
  for (const auto& [j, x] : zb.entries) {
    double* tw = &target[j * h];
    for (std::size_t k = 0; k < h; ++k) tw[k] -= c * x * db[k];
  }
}

double RankerModel::hinge_argument(const FeaturizedPair& p) const {
  return cfg_.margin -
         label_sign(p.label) * (raw_score(scale(p.a)) - raw_score(scale(p.b)));
}

namespace {

// Indices of regularized parameters: all linear weights, or W and v.
template <typename F>
void for_each_weight(const RankerModel& m, std::size_t n_params, F f) {
  if (!m.is_hidden()) {
    for (std::size_t i = 0; i < n_params; ++i) f(i);
    return;
  }
  const std::size_t h = static_cast<std::size_t>(m.config().hidden_units);
  const std::size_t w_end = m.dim() * h;
  for (std::size_t i = 0; i < w_end; ++i) f(i);
  for (std::size_t i = w_end + h; i < n_params; ++i) f(i);
}

}  // namespace

double RankerModel::smooth_objective(
    std::span<const FeaturizedPair> pairs) const {
  double loss = 0.0;
  for (const auto& p : pairs) loss += std::max(0.0, hinge_argument(p));
  if (!pairs.empty()) loss /= static_cast<double>(pairs.size());
  double reg = 0.0;
  for_each_weight(*this, params_.size(),
                  [&](std::size_t i) { reg += params_[i] * params_[i]; });
  return loss + cfg_.l2 * reg;
}

std::vector<double> RankerModel::smooth_gradient(
    std::span<const FeaturizedPair> pairs) const {
  std::vector<double> g(params_.size(), 0.0);
  const double inv_n = pairs.empty() ? 0.0 : 1.0 / double(pairs.size());
  for (const auto& p : pairs) {
    add_hinge_subgradient(scale(p.a), scale(p.b), label_sign(p.label), inv_n, g);
  }
  for_each_weight(*this, params_.size(),
                  [&](std::size_t i) { g[i] += 2.0 * cfg_.l2 * params_[i]; });
  return g;
}

std::string RankerModel::serialize() const {
  nlohmann::ordered_json meta;
  meta["format_version"] = kFormatVersion;
  meta["model_type"] = is_hidden() ? "hidden_layer" : "linear";
  meta["dim"] = dim_;
  meta["train_config"] = config_json(cfg_);
  meta["summary"] = {{"epochs_run", summary_.epochs_run},
                     {"best_epoch", summary_.best_epoch},
                     {"best_validation_accuracy",
                      summary_.best_validation_accuracy},
                     {"validation_history", summary_.validation_history}};
  meta["featurizer"] = featurizer_.to_json();
  std::string out = meta.dump(1);
  out.pop_back();  // closing brace
  while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
  append_number_array(out, "standardization_mean", standardizer_.mean);
  append_number_array(out, "standardization_inv_scale",
                      standardizer_.inv_scale);
  append_number_array(out, "parameters", params_);
  out += "\n}\n";
  return out;
}

RankerModel RankerModel::deserialize(const std::string& text) {
  RankerModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw DataError("unsupported model format_version");
    }
    m.dim_ = j.at("dim").get<std::size_t>();
    m.cfg_ = config_from_json(j.at("train_config"));
    m.cfg_.validate();
    const auto& s = j.at("summary");
    m.summary_.epochs_run = s.at("epochs_run").get<int>();
    m.summary_.best_epoch = s.at("best_epoch").get<int>();
    m.summary_.best_validation_accuracy =
        s.at("best_validation_accuracy").get<double>();
    m.summary_.validation_history =
        s.at("validation_history").get<std::vector<double>>();
    m.featurizer_ = FittedFeaturizer::from_json(j.at("featurizer"));
    m.standardizer_.mean = read_number_array(j, "standardization_mean");
    m.standardizer_.inv_scale = read_number_array(j, "standardization_inv_scale");
    m.params_ = read_number_array(j, "parameters");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  const std::size_t h = static_cast<std::size_t>(m.cfg_.hidden_units);
  const std::size_t expected = h == 0 ? m.dim_ : m.dim_ * h + 2 * h;
  if (m.standardizer_.mean.size() != m.dim_ ||
      m.standardizer_.inv_scale.size() != m.dim_ ||
      m.params_.size() != expected) {
    throw DataError("model file: array sizes do not match dim");
  }
  if (m.featurizer_.space().dim() != 0 && m.featurizer_.space().dim() != m.dim_) {
    throw DataError("model file: feature space dimension mismatch");
  }
  m.refresh_offset();
  return m;
}

void RankerModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RankerModel RankerModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize(ss.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

double pair_accuracy(const RankerModel& model,
                     std::span<const FeaturizedPair> pairs, Rng& tie_rng) {
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if (model.predict_pair(p.a, p.b, tie_rng).label == p.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

RankerModel train_pairwise(std::span<const FeaturizedPair> pairs,
                           std::size_t dim, const TrainConfig& cfg,
                           double val_fraction) {
  cfg.validate();
  const std::size_t n = pairs.size();
  if (n < 2) throw DataError("training needs at least two pairs");
  const auto n_val = static_cast<std::size_t>(
      std::ceil(std::max(0.0, val_fraction) * static_cast<double>(n)));
  if (val_fraction <= 0 || n_val == 0) {
    throw DataError("empty validation split");
  }
  if (n_val >= n) throw DataError("validation split leaves no training pairs");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng split_rng(mix64(cfg.seed, 0x7a11));
  split_rng.shuffle(order);
  std::vector<FeaturizedPair> val, train;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_val ? val : train).push_back(pairs[order[i]]);
  }

  RankerModel model(dim, Standardizer::fit(train, dim), cfg);
  struct Prepared {
    SparseVector za, zb;
    double y;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(train.size());
  for (const auto& p : train) {
    prepared.push_back({model.scale(p.a), model.scale(p.b), label_sign(p.label)});
  }

  auto validation_accuracy = [&](int epoch) {
    Rng tie(mix64(cfg.seed, 0x7e57, static_cast<std::uint64_t>(epoch)));
    model.refresh_offset();
    return pair_accuracy(model, val, tie);
  };

  std::vector<double> best = model.params_;
  double best_acc = validation_accuracy(0);
  TrainSummary summary;
  summary.best_validation_accuracy = best_acc;
  int since_best = 0;

  std::vector<std::size_t> visit(prepared.size());
  for (std::size_t i = 0; i < visit.size(); ++i) visit[i] = i;
  Rng shuffle_rng(mix64(cfg.seed, 0x5eed));
  const double lr = cfg.learning_rate;
  const double decay = 1.0 - 2.0 * lr * cfg.l2;
  const double shrink = lr * cfg.l1;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(visit);
    for (auto i : visit) {
      const auto& p = prepared[i];
      model.add_hinge_subgradient(p.za, p.zb, p.y, -lr, model.params_);
      if (cfg.l2 > 0) {
        for_each_weight(model, model.params_.size(),
                        [&](std::size_t k) { model.params_[k] *= decay; });
      }
      if (cfg.l1 > 0) {
        for_each_weight(model, model.params_.size(), [&](std::size_t k) {
          double& w = model.params_[k];
          w = w > shrink ? w - shrink : (w < -shrink ? w + shrink : 0.0);
        });
      }
    }
    double loss = 0.0;
    for (const auto& p : prepared) {
      loss += std::max(0.0, cfg.margin - p.y * (model.raw_score(p.za) -
                                                model.raw_score(p.zb)));
    }
    if (!std::isfinite(loss)) {
      throw DataError("non-finite training loss at epoch " +
                      std::to_string(epoch) +
                      "; lower the learning rate or check feature scales");
    }
    const double acc = validation_accuracy(epoch);
    summary.validation_history.push_back(acc);
    summary.epochs_run = epoch;
    if (acc > best_acc) {
      best_acc = acc;
      best = model.params_;
      summary.best_epoch = epoch;
      summary.best_validation_accuracy = acc;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.params_ = std::move(best);
  model.refresh_offset();
  model.summary_ = std::move(summary);
  return model;
}

GradientCheckResult hinge_gradient_check(const RankerModel& model,
                                         std::span<const FeaturizedPair> batch,
                                         std::uint64_t seed, double h) {
  constexpr double kKinkDistance = 1e-3;
  constexpr int kMaxResamples = 50;
  RankerModel m = model;
  Rng rng(mix64(seed, 0x9c4e));
  GradientCheckResult result;
  auto away_from_kinks = [&] {
    for (const auto& p : batch) {
      if (std::abs(m.hinge_argument(p)) <= kKinkDistance) return false;
    }
    return true;
  };
  while (!away_from_kinks()) {
    if (++result.resamples > kMaxResamples) {
      throw std::runtime_error("gradient check: no point away from hinge kinks");
    }
    auto p = m.parameters();
    for (auto& x : p) x += rng.normal(0.0, 0.05);
    m.set_parameters(std::move(p));
  }
  const auto analytic = m.smooth_gradient(batch);
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + h;
    m.set_parameters(params);
    const double up = m.smooth_objective(batch);
    params[i] = orig - h;
    m.set_parameters(params);
    const double down = m.smooth_objective(batch);
    params[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(analytic[i] - numeric) / denom);
  }
  return result;
}

}  // namespace pairrank
