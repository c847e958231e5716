#include "pairrank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pairrank/error.hpp"
#include "pairrank/image_features.hpp"
#include "pairrank/ingest.hpp"
#include "pairrank/time_features.hpp"

namespace pairrank {
namespace {

constexpr int kBlocks = 16;
constexpr int kBlockPixels = NormalizedImage::kSize / kBlocks;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double hour_of(Timestamp t) {
  const Timestamp s = ((t % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  return static_cast<double>(s) / 3600.0;
}

int weekday_of(Timestamp t) {
  // 1970-01-01 was a Thursday.
  const Timestamp day = (t >= 0 ? t : t - kSecondsPerDay + 1) / kSecondsPerDay;
  return static_cast<int>(((day + 3) % 7 + 7) % 7);
}

// Draws from a fixed discrete distribution by binary search on the CDF.
class CumulativeSampler {
 public:
  explicit CumulativeSampler(const std::vector<double>& weights) {
    cdf_.reserve(weights.size());
    double total = 0.0;
    for (double w : weights) cdf_.push_back(total += w);
  }
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

std::vector<double> zipf_weights(std::size_t n, double s) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(double(i + 1), -s);
  return w;
}

const char* const kSyllables[] = {"ba", "ko", "mi", "ru", "te", "sa", "lo",
                                  "ne", "vi", "zu", "pa", "fe", "go", "hi",
                                  "ja", "ki", "mo", "nu", "ri", "to"};

std::string background_word(std::size_t i) {
  std::size_t v = i + 20;
  std::string digits;
  while (v > 0) {
    digits.insert(0, kSyllables[v % 20]);
    v /= 20;
  }
  return digits;
}

std::string planted_name(bool positive, bool drifted, std::size_t k) {
  const char* stem = drifted ? (positive ? "fresh" : "stale")
                             : (positive ? "glow" : "dull");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu", stem, k);
  return buf;
}

std::string make_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%07zu", prefix, i);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("market setting " + key + ": not a number: " + value);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("market setting " + key + ": not an integer: " + value);
}

std::array<double, 7> parse_week(const std::string& key,
                                 const std::string& value) {
  std::array<double, 7> out{};
  std::stringstream ss(value);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i == 7) break;
    out[i++] = parse_double(key, item);
  }
  if (i != 7 || ss.rdbuf()->in_avail() > 0) {
    throw UsageError("market setting " + key + ": expected 7 values");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("market setting " + key + ": expected true/false");
}

}  // namespace

void MarketConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("market config: ") + what);
  };
  require(n_submissions > 0, "n_submissions must be positive");
  require(duration_days > 0 && std::isfinite(duration_days),
          "duration_days must be positive");
  require(arrival_amplitude >= 0 && arrival_amplitude < 1,
          "arrival_amplitude must be in [0, 1)");
  for (double r : weekday_rate) require(r > 0 && std::isfinite(r), "weekday_rate must be positive");
  for (double e : weekday_effect) require(std::isfinite(e), "weekday_effect must be finite");
  require(sigma_q > 0 && std::isfinite(sigma_q) && std::isfinite(mu_q),
          "sigma_q must be positive");
  require(vote_steps >= 0, "vote_steps must be non-negative");
  for (double w : {bias, alpha, beta, gamma, year_effect, audience_peak_hour,
                   arrival_peak_hour, comment_score_base, comment_skill_weight}) {
    require(std::isfinite(w), "weights must be finite");
  }
  require(audience_width_hours > 0, "audience_width_hours must be positive");
  require(downvote_rate >= 0 && downvote_rate <= 1, "downvote_rate must be in [0, 1]");
  require(background_vocab > 0, "background_vocab must be positive");
  require(title_words >= 1, "title_words must be at least 1");
  require(token_strength >= 0 && token_strength <= 1, "token_strength must be in [0, 1]");
  require(palette_strength >= 0 && palette_strength <= 1,
          "palette_strength must be in [0, 1]");
  require(golden_color < ColorPalette::kSize, "golden_color out of range");
  require(n_authors > 0, "n_authors must be positive");
  require(activity_skew >= 0, "activity_skew must be non-negative");
  require(skill_activity_corr >= -1 && skill_activity_corr <= 1,
          "skill_activity_corr must be in [-1, 1]");
  require(skill_weight >= -1 && skill_weight <= 1, "skill_weight must be in [-1, 1]");
  require(deleted_author_rate >= 0 && deleted_author_rate <= 1,
          "deleted_author_rate must be in [0, 1]");
  require(comments_per_submission >= 0, "comments_per_submission must be non-negative");
  require(reply_fraction >= 0 && reply_fraction <= 1, "reply_fraction must be in [0, 1]");
  require(comment_delay_seconds > 0, "comment_delay_seconds must be positive");
}

void apply_market_setting(MarketConfig& c, const std::string& key,
                          const std::string& v) {
  using Setter = std::function<void(MarketConfig&, const std::string&)>;
  auto num = [](double MarketConfig::*field) -> Setter {
    return [field](MarketConfig& m, const std::string& s) {
      m.*field = parse_double("", s);
    };
  };
  static const std::map<std::string, Setter> setters = {
      {"n_submissions", [](MarketConfig& m, const std::string& s) {
         const auto n = parse_int("n_submissions", s);
         if (n <= 0) throw UsageError("market setting n_submissions must be positive");
         m.n_submissions = static_cast<std::size_t>(n);
       }},
      {"start_utc", [](MarketConfig& m, const std::string& s) { m.start_utc = parse_int("start_utc", s); }},
      {"duration_days", num(&MarketConfig::duration_days)},
      {"community", [](MarketConfig& m, const std::string& s) { m.community = s; }},
      {"seed", [](MarketConfig& m, const std::string& s) {
         m.seed = static_cast<std::uint64_t>(parse_int("seed", s));
       }},
      {"arrival_amplitude", num(&MarketConfig::arrival_amplitude)},
      {"arrival_peak_hour", num(&MarketConfig::arrival_peak_hour)},
      {"weekday_rate", [](MarketConfig& m, const std::string& s) { m.weekday_rate = parse_week("weekday_rate", s); }},
      {"mu_q", num(&MarketConfig::mu_q)},
      {"sigma_q", num(&MarketConfig::sigma_q)},
      {"vote_steps", [](MarketConfig& m, const std::string& s) {
         m.vote_steps = static_cast<int>(parse_int("vote_steps", s));
       }},
      {"bias", num(&MarketConfig::bias)},
      {"alpha", num(&MarketConfig::alpha)},
      {"beta", num(&MarketConfig::beta)},
      {"gamma", num(&MarketConfig::gamma)},
      {"downvote_rate", num(&MarketConfig::downvote_rate)},
      {"audience_peak_hour", num(&MarketConfig::audience_peak_hour)},
      {"audience_width_hours", num(&MarketConfig::audience_width_hours)},
      {"weekday_effect", [](MarketConfig& m, const std::string& s) { m.weekday_effect = parse_week("weekday_effect", s); }},
      {"year_effect", num(&MarketConfig::year_effect)},
      {"background_vocab", [](MarketConfig& m, const std::string& s) {
         m.background_vocab = static_cast<std::size_t>(parse_int("background_vocab", s));
       }},
      {"title_words", num(&MarketConfig::title_words)},
      {"planted_tokens", [](MarketConfig& m, const std::string& s) {
         m.planted_tokens = static_cast<std::size_t>(parse_int("planted_tokens", s));
       }},
      {"token_strength", num(&MarketConfig::token_strength)},
      {"drift_utc", [](MarketConfig& m, const std::string& s) { m.drift_utc = parse_int("drift_utc", s); }},
      {"images", [](MarketConfig& m, const std::string& s) { m.images = parse_bool("images", s); }},
      {"palette_strength", num(&MarketConfig::palette_strength)},
      {"golden_color", [](MarketConfig& m, const std::string& s) {
         m.golden_color = static_cast<std::size_t>(parse_int("golden_color", s));
       }},
      {"n_authors", [](MarketConfig& m, const std::string& s) {
         m.n_authors = static_cast<std::size_t>(parse_int("n_authors", s));
       }},
      {"activity_skew", num(&MarketConfig::activity_skew)},
      {"skill_activity_corr", num(&MarketConfig::skill_activity_corr)},
      {"skill_weight", num(&MarketConfig::skill_weight)},
      {"deleted_author_rate", num(&MarketConfig::deleted_author_rate)},
      {"comments_per_submission", num(&MarketConfig::comments_per_submission)},
      {"reply_fraction", num(&MarketConfig::reply_fraction)},
      {"comment_delay_seconds", num(&MarketConfig::comment_delay_seconds)},
      {"comment_score_base", num(&MarketConfig::comment_score_base)},
      {"comment_skill_weight", num(&MarketConfig::comment_skill_weight)},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw UsageError("unknown market setting: " + key);
  try {
    it->second(c, v);
  } catch (const UsageError&) {
    throw UsageError("market setting " + key + ": bad value " + v);
  }
}

MarketConfig market_preset(const std::string& name) {
  MarketConfig c;
  if (name == "default") {
    c.n_submissions = 20000;
    c.duration_days = 7.0;
    c.planted_tokens = 5;
    c.token_strength = 0.5;
    c.comments_per_submission = 2.0;
    c.skill_weight = 0.5;
    c.skill_activity_corr = 0.5;
    c.gamma = 1.0;
    return c;
  }
  if (name == "time-control") {
    c.n_submissions = 40000;
    c.duration_days = 2.0;
    c.alpha = 0.5;
    c.beta = 0.8;
    c.gamma = 4.0;
    c.bias = -6.0;
    c.audience_peak_hour = 2.5;
    c.audience_width_hours = 5.0;
    c.arrival_peak_hour = 6.0;
    c.arrival_amplitude = 0.8;
    return c;
  }
  if (name == "content") {
    c.n_submissions = 20000;
    c.alpha = 2.0;
    c.beta = 0.5;
    c.bias = -1.0;
    c.planted_tokens = 8;
    c.token_strength = 1.0;
    c.images = true;
    c.palette_strength = 0.5;
    return c;
  }
  if (name == "user") {
    c.n_submissions = 20000;
    c.alpha = 1.5;
    c.beta = 0.5;
    c.n_authors = 800;
    c.skill_weight = 0.6;
    c.skill_activity_corr = 0.5;
    c.comments_per_submission = 3.0;
    return c;
  }
  throw UsageError("unknown market preset: " + name);
}

double audience(const MarketConfig& cfg, Timestamp t) {
  double d = std::fabs(hour_of(t) - cfg.audience_peak_hour);
  d = std::fmod(d, 24.0);
  d = std::min(d, 24.0 - d);
  const double w = cfg.audience_width_hours;
  double a = std::exp(-0.5 * d * d / (w * w));
  a += cfg.weekday_effect[weekday_of(t)];
  if (cfg.year_effect != 0.0) {
    a += cfg.year_effect *
         (utc_fields(t).year - utc_fields(cfg.start_utc).year);
  }
  return a;
}

std::int64_t simulate_score(const MarketConfig& cfg, double log_q,
                            double audience_value, Rng& rng,
                            std::vector<std::int64_t>* trajectory) {
  const double base = cfg.bias + cfg.alpha * log_q + cfg.gamma * audience_value;
  std::int64_t score = 0;
  if (trajectory) trajectory->clear();
  for (int step = 0; step < cfg.vote_steps; ++step) {
    const double reinforce =
        cfg.beta == 0.0 ? 0.0
                        : cfg.beta * std::log1p(static_cast<double>(std::max<std::int64_t>(score, 0)));
    if (rng.uniform() < sigmoid(base + reinforce)) {
      ++score;
    } else if (cfg.downvote_rate > 0.0 && rng.uniform() < cfg.downvote_rate) {
      --score;
    }
    if (trajectory) trajectory->push_back(score);
  }
  return score;
}

Market generate(const MarketConfig& cfg) {
  cfg.validate();
  Market m;
  m.config = cfg;

  // Authors.
  Rng author_rng(mix64(cfg.seed, 1));
  const auto activity = zipf_weights(cfg.n_authors, cfg.activity_skew);
  std::vector<double> log_activity(cfg.n_authors);
  for (std::size_t i = 0; i < cfg.n_authors; ++i) log_activity[i] = std::log(activity[i]);
  const double la_mean = std::accumulate(log_activity.begin(), log_activity.end(), 0.0) /
                         static_cast<double>(cfg.n_authors);
  double la_var = 0.0;
  for (double x : log_activity) la_var += (x - la_mean) * (x - la_mean);
  la_var /= static_cast<double>(cfg.n_authors);
  const double la_sd = std::sqrt(la_var);
  const double c = cfg.skill_activity_corr;
  std::vector<double> skill(cfg.n_authors);
  std::vector<std::string> author_name(cfg.n_authors);
  for (std::size_t i = 0; i < cfg.n_authors; ++i) {
    const double z = la_sd > 0 ? (log_activity[i] - la_mean) / la_sd : 0.0;
    skill[i] = c * z + std::sqrt(1.0 - c * c) * author_rng.normal();
    author_name[i] = make_id('u', i);
  }
  const CumulativeSampler pick_author(activity);

  // Arrivals: rejection sampling from the rate curve, conditioned on n.
  Rng arrival_rng(mix64(cfg.seed, 2));
  const double span = cfg.duration_days * static_cast<double>(kSecondsPerDay);
  const double max_rate = (1.0 + cfg.arrival_amplitude) *
                          *std::max_element(cfg.weekday_rate.begin(), cfg.weekday_rate.end());
  std::vector<Timestamp> times;
  times.reserve(cfg.n_submissions);
  while (times.size() < cfg.n_submissions) {
    const Timestamp t = cfg.start_utc + static_cast<Timestamp>(arrival_rng.uniform() * span);
    const double rate = (1.0 + cfg.arrival_amplitude *
                                   std::cos(2.0 * M_PI * (hour_of(t) - cfg.arrival_peak_hour) / 24.0)) *
                        cfg.weekday_rate[weekday_of(t)];
    if (arrival_rng.uniform() * max_rate < rate) times.push_back(t);
  }
  std::sort(times.begin(), times.end());

  Rng quality_rng(mix64(cfg.seed, 3));
  Rng vote_rng(mix64(cfg.seed, 4));
  Rng text_rng(mix64(cfg.seed, 5));
  Rng image_rng(mix64(cfg.seed, 6));
  Rng comment_rng(mix64(cfg.seed, 7));
  const CumulativeSampler pick_word(zipf_weights(cfg.background_vocab, 1.0));
  std::vector<std::string> vocab(cfg.background_vocab);
  for (std::size_t i = 0; i < vocab.size(); ++i) vocab[i] = background_word(i);

  const double rho = cfg.skill_weight;
  std::size_t comment_counter = 0;
  m.submissions.reserve(cfg.n_submissions);
  for (std::size_t i = 0; i < cfg.n_submissions; ++i) {
    const Timestamp t = times[i];
    Submission s;
    s.id = make_id('s', i);
    s.community = cfg.community;
    s.created_utc = t;
    const std::size_t author = pick_author.draw(author_rng);
    s.author = author_rng.uniform() < cfg.deleted_author_rate
                   ? std::string(kDeletedAuthor)
                   : author_name[author];

    const double z = rho * skill[author] + std::sqrt(1.0 - rho * rho) * quality_rng.normal();
    const double log_q = cfg.mu_q + cfg.sigma_q * z;
    const double u = std_normal_cdf(z);
    m.truth.quality[s.id] = std::exp(log_q);
    s.score = simulate_score(cfg, log_q, audience(cfg, t), vote_rng);

    // Title.
    std::vector<std::string> words;
    const auto n_words = 1 + text_rng.poisson(cfg.title_words - 1.0);
    for (std::int64_t w = 0; w < n_words; ++w) words.push_back(vocab[pick_word.draw(text_rng)]);
    const bool drifted = cfg.drift_utc && t >= *cfg.drift_utc;
    const double lift = cfg.token_strength * (u - 0.5);
    auto& planted = m.truth.planted[s.id];
    for (std::size_t k = 0; k < cfg.planted_tokens; ++k) {
      if (text_rng.uniform() < clamp01(0.5 + lift)) planted.push_back(planted_name(true, drifted, k));
      if (text_rng.uniform() < clamp01(0.5 - lift)) planted.push_back(planted_name(false, drifted, k));
    }
    words.insert(words.end(), planted.begin(), planted.end());
    text_rng.shuffle(words);
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w) s.title += ' ';
      s.title += words[w];
    }
    if (!s.title.empty()) s.title[0] = static_cast<char>(std::toupper(s.title[0]));

    if (cfg.images) {
      ImageSpec spec;
      spec.seed = image_rng.next();
      spec.golden_fraction = clamp01(0.25 + 0.5 * cfg.palette_strength * (u - 0.5));
      m.images[s.id] = spec;
      s.image_ref = "images/" + s.id + ".png";
    }

    // Comments.
    const auto n_comments = comment_rng.poisson(cfg.comments_per_submission);
    std::vector<std::pair<std::string, Timestamp>> thread;
    for (std::int64_t k = 0; k < n_comments; ++k) {
      Comment cm;
      cm.id = make_id('c', comment_counter++);
      const std::size_t who = pick_author.draw(comment_rng);
      cm.author = author_name[who];
      cm.link_id = "t3_" + s.id;
      Timestamp parent_time = t;
      if (!thread.empty() && comment_rng.uniform() < cfg.reply_fraction) {
        const auto& parent = thread[comment_rng.index(thread.size())];
        cm.parent_id = "t1_" + parent.first;
        parent_time = parent.second;
      } else {
        cm.parent_id = "t3_" + s.id;
      }
      cm.created_utc = parent_time + 1 +
                       static_cast<Timestamp>(comment_rng.exponential(1.0 / cfg.comment_delay_seconds));
      cm.score = comment_rng.poisson(
          std::exp(cfg.comment_score_base + cfg.comment_skill_weight * skill[who]));
      const auto body_words = 1 + comment_rng.poisson(8.0);
      for (std::int64_t w = 0; w < body_words; ++w) {
        if (w) cm.body += ' ';
        cm.body += vocab[pick_word.draw(comment_rng)];
      }
      thread.emplace_back(cm.id, cm.created_utc);
      m.comments.push_back(std::move(cm));
    }
    m.submissions.push_back(std::move(s));
  }
  std::sort(m.comments.begin(), m.comments.end(), [](const Comment& a, const Comment& b) {
    return std::tie(a.created_utc, a.id) < std::tie(b.created_utc, b.id);
  });
  return m;
}

Label label_oracle(const GroundTruth& truth, const RankedPair& pair) {
  const auto a = truth.quality.find(pair.id_a);
  const auto b = truth.quality.find(pair.id_b);
  if (a == truth.quality.end()) throw DataError("no ground truth for " + pair.id_a);
  if (b == truth.quality.end()) throw DataError("no ground truth for " + pair.id_b);
  if (a->second == b->second) {
    throw DataError("equal latent quality in pair " + pair.pair_id);
  }
  return a->second > b->second ? Label::kAWins : Label::kBWins;
}

NormalizedImage render_market_image(const ImageSpec& spec,
                                    std::size_t golden_color) {
  const auto& palette = default_palette();
  Rng rng(spec.seed);
  constexpr int kCells = kBlocks * kBlocks;
  std::vector<std::size_t> cells(kCells);
  for (auto& cell : cells) {
    if (rng.uniform() < spec.golden_fraction) {
      cell = golden_color;
    } else {
      cell = rng.index(ColorPalette::kSize - 1);
      if (cell >= golden_color) ++cell;
    }
  }
  NormalizedImage img;
  for (int by = 0; by < kBlocks; ++by) {
    for (int bx = 0; bx < kBlocks; ++bx) {
      const Rgb& col = palette[cells[by * kBlocks + bx]];
      for (int y = 0; y < kBlockPixels; ++y) {
        for (int x = 0; x < kBlockPixels; ++x) {
          img.set(by * kBlockPixels + y, bx * kBlockPixels + x, col[0], col[1], col[2]);
        }
      }
    }
  }
  return img;
}

std::optional<NormalizedImage> SyntheticImageSource::image_for(
    const Submission& s) const {
  const auto it = market_.images.find(s.id);
  if (it == market_.images.end()) return std::nullopt;
  return render_market_image(it->second, market_.config.golden_color);
}

void write_market(const std::filesystem::path& dir, const Market& market,
                  bool with_images) {
  std::filesystem::create_directories(dir);
  write_submissions(dir / "submissions.jsonl", market.submissions);
  write_comments(dir / "comments.jsonl", market.comments);
  std::ofstream gt(dir / "ground_truth.tsv");
  if (!gt) throw std::runtime_error("cannot write " + (dir / "ground_truth.tsv").string());
  char buf[64];
  for (const auto& s : market.submissions) {
    std::snprintf(buf, sizeof buf, "%.17g", market.truth.quality.at(s.id));
    gt << s.id << '\t' << buf << '\n';
  }
  if (with_images && !market.images.empty()) {
    std::filesystem::create_directories(dir / "images");
    for (const auto& s : market.submissions) {
      write_png(dir / *s.image_ref,
                render_market_image(market.images.at(s.id), market.config.golden_color));
    }
  }
}

std::map<std::string, double> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected id<TAB>quality");
    }
    try {
      out[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad quality value");
    }
  }
  return out;
}

}  // namespace pairrank
