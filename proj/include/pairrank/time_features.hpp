#ifndef PAIRRANK_TIME_FEATURES_HPP_
#define PAIRRANK_TIME_FEATURES_HPP_

#include <cstddef>
#include <span>

#include "pairrank/rng.hpp"
#include "pairrank/sparse.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

struct YearRange {
  int min_year = 1970;
  int max_year = 1970;

  std::size_t size() const { return static_cast<std::size_t>(max_year - min_year + 1); }
  bool operator==(const YearRange&) const = default;
};

// Smallest range covering every timestamp (UTC). Throws DataError on an
// empty span.
YearRange year_range_of(std::span<const Timestamp> times);

struct UtcFields {
  int minute = 0;   // 0..59
  int hour = 0;     // 0..23
  int weekday = 0;  // 0 = Monday .. 6 = Sunday
  int year = 1970;
  int day_of_year = 0;  // 0-based
};

UtcFields utc_fields(Timestamp t);

inline constexpr std::size_t kMinuteBlock = 60;
inline constexpr std::size_t kHourBlock = 24;
inline constexpr std::size_t kWeekdayBlock = 7;

struct TimeEncoding {
  std::size_t minute = 0;
  std::size_t hour = 0;
  std::size_t weekday = 0;
  std::size_t year_index = 0;
  bool year_clamped = false;  // year fell outside the trained range

  static std::size_t dim(const YearRange& years) {
    return kMinuteBlock + kHourBlock + kWeekdayBlock + years.size();
  }
  // Four ones at minute, 60 + hour, 84 + weekday, 91 + year_index.
  SparseVector to_sparse() const;
};

TimeEncoding time_onehot(Timestamp t, const YearRange& years);

// enc(self) followed by enc(other); never a difference.
SparseVector pair_time_features(Timestamp self, Timestamp other,
                                const YearRange& years);

// The earlier member is predicted to win; exact ties use the coin.
Label earlier_baseline(Timestamp created_a, Timestamp created_b, Rng& tie_rng);

}  // namespace pairrank

#endif  // PAIRRANK_TIME_FEATURES_HPP_
