#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pairrank/analysis.hpp"
#include "pairrank/error.hpp"
#include "pairrank/rng.hpp"
#include "pairrank/synth.hpp"
#include "test_util.hpp"

using namespace pairrank;

namespace {

std::size_t argmax_mean(const std::vector<ProfilePoint>& pts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].count > 0 && (pts[best].count == 0 || pts[i].mean > pts[best].mean)) best = i;
  }
  return best;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("uniform scores give a flat diurnal curve") {
  Rng rng(1);
  std::vector<Submission> subs;
  for (int i = 0; i < 3000; ++i) subs.push_back(test::sub("s" + std::to_string(i), rng.index(7 * kSecondsPerDay), 42));
  const auto prof = diurnal_profile(subs);
  REQUIRE(prof.size() == 1440);
  for (const auto& p : prof) {
    if (p.count == 0) continue;
    CHECK(p.mean == 42.0);
    if (p.count > 1) {
      CHECK(p.ci_low == 42.0);
      CHECK(p.ci_high == 42.0);
    }
  }
}

TEST_CASE("diurnal counts sum to n times the window") {
  Rng rng(2);
  std::vector<Submission> subs;
  for (int i = 0; i < 2500; ++i) {
    subs.push_back(test::sub("s" + std::to_string(i), rng.index(3 * kSecondsPerDay),
                             static_cast<std::int64_t>(rng.index(1000))));
  }
  for (int w : {1, 30, 45, 1440}) {
    std::size_t total = 0;
    for (const auto& p : diurnal_profile(subs, w)) total += p.count;
    CHECK(total == subs.size() * static_cast<std::size_t>(w));
  }
  // Brute-force window means at a few minutes, including across midnight.
  const auto prof = diurnal_profile(subs, 30);
  for (int m : {0, 7, 600, 1439}) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& s : subs) {
      const int mm = static_cast<int>((s.created_utc % kSecondsPerDay) / 60);
      // Covered minutes are m - 15 .. m + 14.
      const bool inside = (mm - m + 1440) % 1440 < 15 || (m - mm + 1440) % 1440 <= 15;
      if (inside) {
        sum += static_cast<double>(s.score);
        ++n;
      }
    }
    CHECK(prof[m].count == n);
    CHECK(prof[m].mean == doctest::Approx(sum / n).epsilon(1e-12));
  }
  CHECK_THROWS_AS(diurnal_profile(subs, 0), std::invalid_argument);
}

TEST_CASE("generator audience peak at 9 AM shows in the curve") {
  auto cfg = market_preset("default");
  cfg.n_submissions = 20000;
  cfg.seed = 5;
  cfg.gamma = 3.0;
  cfg.audience_peak_hour = 9.0;
  cfg.audience_width_hours = 1.5;
  const auto market = generate(cfg);
  const auto prof = diurnal_profile(market.submissions);
  const auto peak = static_cast<int>(argmax_mean(prof));
  MESSAGE("peak minute " << peak);
  CHECK(std::abs(peak - 540) <= 30);
}

TEST_CASE("weekday and year profiles follow generator effects") {
  auto cfg = market_preset("default");
  cfg.n_submissions = 15000;
  cfg.duration_days = 3 * 365;
  cfg.seed = 6;
  cfg.weekday_effect = {0, 0, 0, 0, 0, 1.5, 0};
  cfg.year_effect = 0.7;
  const auto market = generate(cfg);
  const auto week = weekday_profile(market.submissions);
  REQUIRE(week.size() == 7);
  CHECK(argmax_mean(week) == 5);
  const auto years = year_profile(market.submissions);
  REQUIRE(years.size() >= 3);
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i].count > 100 && years[i - 1].count > 100) CHECK(years[i].mean > years[i - 1].mean);
  }
  std::ostringstream out;
  write_profile(out, week);
  CHECK(out.str().rfind("x\ty\tci_low\tci_high\tn\n0\t", 0) == 0);
}

TEST_CASE("mean normalization") {
  std::vector<Submission> flat;
  for (int i = 0; i < 50; ++i) flat.push_back(test::sub("s" + std::to_string(i), 1000 + 60 * i, 7));
  const auto mn = mean_normalize(flat);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    REQUIRE(mn.values[i].has_value());
    CHECK(*mn.values[i] == 1.0);
  }
  const auto single = mean_normalize(std::vector<Submission>{test::sub("x", 5, 3)});
  CHECK_FALSE(single.values[0].has_value());
  CHECK(single.undefined == 1);
  CHECK(single.coverage == 0.0);

  const std::vector<Submission> zeros{test::sub("a", 1, 0), test::sub("b", 2, 5)};
  const auto z = mean_normalize(zeros);
  CHECK_FALSE(z.values[1].has_value());
  CHECK(*z.values[0] == 0.0);

  const std::vector<Submission> unsorted{test::sub("a", 2, 1), test::sub("b", 1, 1)};
  CHECK_THROWS_AS(mean_normalize(unsorted), DataError);
}

TEST_CASE("mean normalization coverage equals a brute-force window recount") {
  Rng rng(7);
  std::vector<Submission> subs;
  for (int i = 0; i < 800; ++i) {
    subs.push_back(test::sub("s" + std::to_string(i), rng.index(2 * kSecondsPerDay),
                             1 + static_cast<std::int64_t>(rng.index(50))));
  }
  std::sort(subs.begin(), subs.end(), [](const auto& a, const auto& b) { return a.created_utc < b.created_utc; });
  const auto mn = mean_normalize(subs);
  std::size_t covered = 0;
  double total = 0;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    std::size_t n = 0;
    double sum = 0;
    for (std::size_t j = 0; j < subs.size(); ++j) {
      if (i != j && std::abs(subs[j].created_utc - subs[i].created_utc) <= 1800) {
        ++n;
        sum += subs[j].score;
      }
    }
    CHECK(mn.neighbor_counts[i] == n);
    if (n > 0) CHECK(*mn.values[i] == doctest::Approx(subs[i].score / (sum / n)).epsilon(1e-12));
    covered += n >= 5;
    total += n;
  }
  CHECK(mn.coverage == static_cast<double>(covered) / subs.size());
  CHECK(mn.mean_neighbors == doctest::Approx(total / subs.size()).epsilon(1e-12));
}

TEST_CASE("score moments") {
  std::vector<Submission> sym;
  for (int i = 0; i < 30; ++i) sym.push_back(test::sub("s" + std::to_string(i), i, i % 3 - 1));
  const auto m = score_moments(sym);
  CHECK(std::abs(m.skewness) < 1e-12);
  std::vector<Submission> skewed;
  for (int i = 0; i < 30; ++i) skewed.push_back(test::sub("s" + std::to_string(i), i, i < 27 ? 1 : 100));
  CHECK(score_moments(skewed).skewness > 1.0);
  std::vector<Submission> constant(5, test::sub("c", 1, 4));
  CHECK_THROWS_AS(score_moments(constant), DataError);
  CHECK_THROWS_AS(score_moments(std::vector<Submission>(3, test::sub("c", 1, 4))), DataError);
}

TEST_CASE("human accuracy") {
  std::vector<RankedPair> pairs(20);
  std::vector<Judgment> judgments;
  for (int i = 0; i < 20; ++i) {
    pairs[i].pair_id = "p" + std::to_string(i);
    pairs[i].label = i % 2 ? Label::kAWins : Label::kBWins;
    judgments.push_back({"perfect", pairs[i].pair_id, pairs[i].label, "", 0});
    judgments.push_back({"contrary", pairs[i].pair_id, flip(pairs[i].label), "", 0});
  }
  const auto h = human_accuracy(judgments, pairs);
  CHECK(h.per_annotator.at("perfect").accuracy() == 1.0);
  CHECK(h.per_annotator.at("contrary").accuracy() == 0.0);
  CHECK(h.aggregate.n == 40);
  CHECK(h.aggregate.accuracy() == 0.5);
  judgments.push_back({"x", "nope", Label::kAWins, "", 0});
  CHECK_THROWS_AS(human_accuracy(judgments, pairs), DataError);
}

}  // TEST_SUITE
