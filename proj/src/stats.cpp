#include "pairrank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "pairrank/error.hpp"

namespace pairrank {

double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  // Shifted by the first value so a constant sample gives exactly zero.
  const double shift = xs[0];
  double sum = 0.0;
  for (double x : xs) sum += x - shift;
  const double m = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - shift - m) * (x - shift - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double t_half_width(std::size_t n, double variance, double level) {
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  if (variance <= 0.0) return 0.0;
  boost::math::students_t dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  return t * std::sqrt(variance / static_cast<double>(n));
}

double t_confidence_half_width(std::span<const double> xs, double level) {
  return t_half_width(xs.size(), sample_variance(xs), level);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && xs[idx[j]] == xs[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = avg;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("correlation: length mismatch");
  if (xs.size() < 2) throw DataError("correlation: need at least two values");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("correlation: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("spearman: length mismatch");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

std::vector<FeatureCorrelation> feature_correlations(
    std::span<const double> scores,
    const std::vector<std::vector<double>>& columns, double alpha) {
  if (scores.size() < 3) {
    throw DataError("feature correlations need at least three rows");
  }
  const double per_test = alpha / static_cast<double>(std::max<std::size_t>(1, columns.size()));
  const boost::math::normal_distribution<double> normal;
  const double z_crit = boost::math::quantile(normal, 1.0 - per_test / 2.0);
  const double n = static_cast<double>(scores.size());
  std::vector<FeatureCorrelation> out;
  out.reserve(columns.size());
  for (const auto& col : columns) {
    if (col.size() != scores.size()) {
      throw DataError("feature correlations: column length mismatch");
    }
    FeatureCorrelation fc;
    double r;
    try {
      r = pearson(scores, col);
    } catch (const DataError&) {
      out.push_back(fc);
      continue;
    }
    fc.defined = true;
    fc.r = r;
    if (n > 3) {
      const double z = std::atanh(std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15));
      const double se = 1.0 / std::sqrt(n - 3.0);
      fc.ci_low = std::tanh(z - z_crit * se);
      fc.ci_high = std::tanh(z + z_crit * se);
      fc.significant = fc.ci_low > 0.0 || fc.ci_high < 0.0;
    } else {
      fc.ci_low = -1.0;
      fc.ci_high = 1.0;
    }
    out.push_back(fc);
  }
  return out;
}

Moments sample_moments(std::span<const double> xs) {
  if (xs.size() < 4) throw DataError("moments need at least four values");
  const double m = mean(xs);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - m;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(xs.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 == 0.0) throw DataError("moments of a constant sample");
  return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

}  // namespace pairrank
