#ifndef PAIRRANK_ANALYSIS_HPP_
#define PAIRRANK_ANALYSIS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pairrank/stats.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

inline constexpr int kMinutesPerDay = 1440;

// One plotted point: mean score at x with a Student-t 95% interval.
struct ProfilePoint {
  double x = 0.0;
  double mean = 0.0;  // NaN when count is 0
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t count = 0;
};

// For every minute of the UTC day, the mean score of submissions whose
// minute-of-day lies in [m - window/2, m + window/2), wrapping midnight.
std::vector<ProfilePoint> diurnal_profile(std::span<const Submission> subs,
                                          int window_minutes = 30);
// Mean score per UTC weekday (x = 0 for Monday).
std::vector<ProfilePoint> weekday_profile(std::span<const Submission> subs);
// Mean score per UTC calendar year present in the data.
std::vector<ProfilePoint> year_profile(std::span<const Submission> subs);

// Columns x, y, ci_low, ci_high, n.
void write_profile(std::ostream& out, std::span<const ProfilePoint> points);

struct MeanNormalization {
  // Parallel to the input; empty when there is no neighbor or the
  // neighbor mean is zero.
  std::vector<std::optional<double>> values;
  std::vector<std::size_t> neighbor_counts;
  std::size_t undefined = 0;
  double coverage = 0.0;  // fraction with at least 5 neighbors
  double mean_neighbors = 0.0;
};

inline constexpr std::size_t kCoverageNeighbors = 5;

// Divides each score by the mean score of the other submissions posted
// within window/2 seconds of it. Throws DataError when the input is not
// sorted by created_utc.
MeanNormalization mean_normalize(std::span<const Submission> subs,
                                 Timestamp window_seconds = 3600);

// Sample skewness and excess kurtosis of the scores.
Moments score_moments(std::span<const Submission> subs);

struct Judgment {
  std::string session_id;
  std::string pair_id;
  Label choice = Label::kAWins;
  std::string rationale;
  Timestamp submitted_at = 0;
};

struct AccuracyCount {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy() const {
    return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
  }
};

struct HumanAccuracy {
  std::map<std::string, AccuracyCount> per_annotator;
  AccuracyCount aggregate;
};

// Throws DataError for a judgment on an unknown pair.
HumanAccuracy human_accuracy(std::span<const Judgment> judgments,
                             std::span<const RankedPair> pairs);

}  // namespace pairrank

#endif  // PAIRRANK_ANALYSIS_HPP_
