#include "pairrank/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "pairrank/error.hpp"
#include "pairrank/time_features.hpp"

namespace pairrank {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Exact integer accumulator for mean and variance.
struct ScoreSums {
  std::int64_t n = 0;
  std::int64_t sum = 0;
  __int128 sum_sq = 0;

  void add(std::int64_t s, int sign = 1) {
    n += sign;
    sum += sign * s;
    sum_sq += sign * static_cast<__int128>(s) * s;
  }

  ProfilePoint point(double x) const {
    ProfilePoint p;
    p.x = x;
    p.count = static_cast<std::size_t>(n);
    if (n == 0) {
      p.mean = p.ci_low = p.ci_high = kNaN;
      return p;
    }
    p.mean = static_cast<double>(sum) / static_cast<double>(n);
    double var = 0.0;
    if (n > 1) {
      const __int128 num = static_cast<__int128>(n) * sum_sq -
                           static_cast<__int128>(sum) * sum;
      var = static_cast<double>(num) / (static_cast<double>(n) * (n - 1));
    }
    const double hw = t_half_width(p.count, var);
    p.ci_low = p.mean - hw;
    p.ci_high = p.mean + hw;
    return p;
  }
};

int minute_of_day(Timestamp t) {
  const Timestamp s = ((t % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  return static_cast<int>(s / 60);
}

}  // namespace

std::vector<ProfilePoint> diurnal_profile(std::span<const Submission> subs,
                                          int window_minutes) {
  if (window_minutes < 1 || window_minutes > kMinutesPerDay) {
    throw std::invalid_argument("window must be 1..1440 minutes");
  }
  std::vector<ScoreSums> per_minute(kMinutesPerDay);
  for (const auto& s : subs) per_minute[minute_of_day(s.created_utc)].add(s.score);

  // Window for minute m covers minutes m - lo .. m + hi.
  const int lo = window_minutes / 2;
  const int hi = window_minutes - lo - 1;
  auto wrap = [](int m) { return ((m % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay; };
  auto merge = [](ScoreSums& acc, const ScoreSums& b, int sign) {
    acc.n += sign * b.n;
    acc.sum += sign * b.sum;
    acc.sum_sq += sign * b.sum_sq;
  };
  ScoreSums acc;
  for (int d = -lo; d <= hi; ++d) merge(acc, per_minute[wrap(d)], 1);
  std::vector<ProfilePoint> out;
  out.reserve(kMinutesPerDay);
  for (int m = 0; m < kMinutesPerDay; ++m) {
    out.push_back(acc.point(m));
    merge(acc, per_minute[wrap(m - lo)], -1);
    merge(acc, per_minute[wrap(m + hi + 1)], 1);
  }
  return out;
}

std::vector<ProfilePoint> weekday_profile(std::span<const Submission> subs) {
  std::vector<ScoreSums> bins(7);
  for (const auto& s : subs) bins[utc_fields(s.created_utc).weekday].add(s.score);
  std::vector<ProfilePoint> out;
  for (int d = 0; d < 7; ++d) out.push_back(bins[d].point(d));
  return out;
}

std::vector<ProfilePoint> year_profile(std::span<const Submission> subs) {
  std::map<int, ScoreSums> bins;
  for (const auto& s : subs) bins[utc_fields(s.created_utc).year].add(s.score);
  std::vector<ProfilePoint> out;
  for (const auto& [year, sums] : bins) out.push_back(sums.point(year));
  return out;
}

void write_profile(std::ostream& out, std::span<const ProfilePoint> points) {
  out << "x\ty\tci_low\tci_high\tn\n";
  char buf[160];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.10g\t%.10g\t%.10g\t%.10g\t%zu\n", p.x,
                  p.mean, p.ci_low, p.ci_high, p.count);
    out << buf;
  }
}

MeanNormalization mean_normalize(std::span<const Submission> subs,
                                 Timestamp window_seconds) {
  if (window_seconds <= 0) throw std::invalid_argument("window must be positive");
  for (std::size_t i = 1; i < subs.size(); ++i) {
    if (subs[i].created_utc < subs[i - 1].created_utc) {
      throw DataError("mean normalization needs submissions sorted by time");
    }
  }
  const Timestamp half = window_seconds / 2;
  MeanNormalization r;
  r.values.resize(subs.size());
  r.neighbor_counts.resize(subs.size());
  std::size_t lo = 0, hi = 0;
  std::int64_t window_sum = 0;
  std::size_t covered = 0;
  double neighbor_total = 0.0;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const Timestamp t = subs[i].created_utc;
    while (hi < subs.size() && subs[hi].created_utc <= t + half) {
      window_sum += subs[hi++].score;
    }
    while (subs[lo].created_utc < t - half) window_sum -= subs[lo++].score;
    const std::size_t neighbors = hi - lo - 1;
    const std::int64_t others = window_sum - subs[i].score;
    r.neighbor_counts[i] = neighbors;
    neighbor_total += static_cast<double>(neighbors);
    if (neighbors >= kCoverageNeighbors) ++covered;
    if (neighbors == 0 || others == 0) {
      ++r.undefined;
      continue;
    }
    const double m = static_cast<double>(others) / static_cast<double>(neighbors);
    r.values[i] = static_cast<double>(subs[i].score) / m;
  }
  if (!subs.empty()) {
    r.coverage = static_cast<double>(covered) / static_cast<double>(subs.size());
    r.mean_neighbors = neighbor_total / static_cast<double>(subs.size());
  }
  return r;
}

Moments score_moments(std::span<const Submission> subs) {
  std::vector<double> scores;
  scores.reserve(subs.size());
  for (const auto& s : subs) scores.push_back(static_cast<double>(s.score));
  return sample_moments(scores);
}

HumanAccuracy human_accuracy(std::span<const Judgment> judgments,
                             std::span<const RankedPair> pairs) {
  std::unordered_map<std::string, Label> truth;
  for (const auto& p : pairs) truth.emplace(p.pair_id, p.label);
  HumanAccuracy r;
  for (const auto& j : judgments) {
    const auto it = truth.find(j.pair_id);
    if (it == truth.end()) throw DataError("judgment for unknown pair " + j.pair_id);
    const bool correct = it->second == j.choice;
    auto& a = r.per_annotator[j.session_id];
    ++a.n;
    ++r.aggregate.n;
    if (correct) {
      ++a.correct;
      ++r.aggregate.correct;
    }
  }
  return r;
}

}  // namespace pairrank
