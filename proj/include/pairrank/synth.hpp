#ifndef PAIRRANK_SYNTH_HPP_
#define PAIRRANK_SYNTH_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairrank/dataset.hpp"
#include "pairrank/image.hpp"
#include "pairrank/rng.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

// Rich-get-richer market. Each submission receives `vote_steps` vote
// opportunities with
//   P(up) = sigmoid(bias + alpha log q + beta log(1 + score) + gamma a(t))
// where a(t) is a wrapped Gaussian bump over the UTC hour plus weekday and
// yearly offsets.
struct MarketConfig {
  std::size_t n_submissions = 5000;
  Timestamp start_utc = 1388534400;  // 2014-01-01T00:00:00Z
  double duration_days = 14.0;
  std::string community = "synthetic";
  std::uint64_t seed = 0;

  // Arrival rate: (1 + amplitude cos(2 pi (hour - peak) / 24)) times a
  // weekday multiplier (Monday first).
  double arrival_amplitude = 0.5;
  double arrival_peak_hour = 18.0;
  std::array<double, 7> weekday_rate{1, 1, 1, 1, 1, 1, 1};

  // log q ~ N(mu_q, sigma_q^2).
  double mu_q = 0.0;
  double sigma_q = 1.0;

  int vote_steps = 200;
  double bias = -1.5;
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 0.0;
  double downvote_rate = 0.0;  // chance a non-upvote step is a downvote

  double audience_peak_hour = 20.0;
  double audience_width_hours = 3.0;
  std::array<double, 7> weekday_effect{};
  double year_effect = 0.0;  // added per calendar year after the start

  // Titles: background words from a Zipf vocabulary plus planted tokens.
  std::size_t background_vocab = 2000;
  double title_words = 6.0;
  std::size_t planted_tokens = 0;  // per polarity
  double token_strength = 0.0;     // 0..1
  std::optional<Timestamp> drift_utc;  // planted names change from here on

  // Images: 16x16 blocks; the golden palette color covers a share of the
  // blocks that grows with quality.
  bool images = false;
  double palette_strength = 0.0;  // 0..1
  std::size_t golden_color = 5;

  // Authors: Zipf activity; skill correlated with log activity; quality
  // correlated with skill.
  std::size_t n_authors = 1000;
  double activity_skew = 1.0;
  double skill_activity_corr = 0.0;
  double skill_weight = 0.0;
  double deleted_author_rate = 0.0;

  // Comments: Poisson count per submission, exponential delays, scores
  // driven by the commenter's skill.
  double comments_per_submission = 0.0;
  double reply_fraction = 0.3;
  double comment_delay_seconds = 3600.0;
  double comment_score_base = 1.0;
  double comment_skill_weight = 1.0;

  // Throws std::invalid_argument.
  void validate() const;
};

// Applies key=value settings (keys are the field names above; arrays take
// comma lists). Throws UsageError on unknown keys or bad values.
void apply_market_setting(MarketConfig& cfg, const std::string& key,
                          const std::string& value);
// Named starting points: default, time-control, content, user.
MarketConfig market_preset(const std::string& name);

struct ImageSpec {
  std::uint64_t seed = 0;
  double golden_fraction = 0.0;
};

struct GroundTruth {
  std::unordered_map<std::string, double> quality;  // q
  std::unordered_map<std::string, std::vector<std::string>> planted;
};

struct Market {
  MarketConfig config;
  std::vector<Submission> submissions;  // sorted by (created_utc, id)
  std::vector<Comment> comments;        // sorted by (created_utc, id)
  GroundTruth truth;
  std::unordered_map<std::string, ImageSpec> images;
};

Market generate(const MarketConfig& cfg);

// The wrapped Gaussian diurnal term plus weekday and year offsets.
double audience(const MarketConfig& cfg, Timestamp t);

// Runs the vote process for one item. When `trajectory` is set it receives
// the score after every step.
std::int64_t simulate_score(const MarketConfig& cfg, double log_q,
                            double audience_value, Rng& rng,
                            std::vector<std::int64_t>* trajectory = nullptr);

// Label of the higher-quality member. Throws DataError on unknown ids or
// equal qualities.
Label label_oracle(const GroundTruth& truth, const RankedPair& pair);

NormalizedImage render_market_image(const ImageSpec& spec,
                                    std::size_t golden_color);

class SyntheticImageSource : public ImageSource {
 public:
  explicit SyntheticImageSource(const Market& market) : market_(market) {}
  std::optional<NormalizedImage> image_for(const Submission& s) const override;

 private:
  const Market& market_;
};

// Writes submissions.jsonl, comments.jsonl, ground_truth.tsv and, when
// `with_images` is set, images/<id>.png.
void write_market(const std::filesystem::path& dir, const Market& market,
                  bool with_images);

std::map<std::string, double> read_ground_truth(const std::filesystem::path& path);

}  // namespace pairrank

#endif  // PAIRRANK_SYNTH_HPP_
