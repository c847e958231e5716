#ifndef PAIRRANK_STATS_HPP_
#define PAIRRANK_STATS_HPP_

#include <span>
#include <vector>

namespace pairrank {

double mean(std::span<const double> xs);
// Unbiased (n - 1) variance; 0 for fewer than two values.
double sample_variance(std::span<const double> xs);

// Half-width of the Student-t confidence interval for the mean. 0 when the
// values have no spread, NaN for fewer than two values.
double t_confidence_half_width(std::span<const double> xs, double level = 0.95);
// Same interval from summary statistics (n values, unbiased variance).
double t_half_width(std::size_t n, double variance, double level = 0.95);

// 1-based ranks; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> xs);

// Throws DataError on length mismatch, fewer than two values or zero
// variance.
double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);

struct FeatureCorrelation {
  bool defined = false;  // false for a constant column
  double r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool significant = false;  // interval excludes zero
};

// Pearson R of every column against `scores`, with Fisher-z intervals at
// family level alpha split across the columns (Bonferroni). Requires at
// least four rows for the interval (three for R alone).
std::vector<FeatureCorrelation> feature_correlations(
    std::span<const double> scores,
    const std::vector<std::vector<double>>& columns, double alpha = 0.05);

struct Moments {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

// Moment-based g1 and g2 of the sample. Throws DataError for fewer than
// four values or zero variance.
Moments sample_moments(std::span<const double> xs);

}  // namespace pairrank

#endif  // PAIRRANK_STATS_HPP_
