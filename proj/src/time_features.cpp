#include "pairrank/time_features.hpp"

#include <algorithm>
#include <chrono>

#include "pairrank/error.hpp"

namespace pairrank {

UtcFields utc_fields(Timestamp t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t}};
  const sys_days day = floor<days>(tp);
  const year_month_day ymd{day};
  const auto in_day = tp - day;
  UtcFields f;
  f.hour = static_cast<int>(duration_cast<hours>(in_day).count());
  f.minute = static_cast<int>(duration_cast<minutes>(in_day).count() % 60);
  f.weekday = static_cast<int>(weekday{day}.iso_encoding()) - 1;
  f.year = static_cast<int>(ymd.year());
  f.day_of_year = static_cast<int>(
      (day - sys_days{year_month_day{ymd.year(), January, std::chrono::day{1}}})
          .count());
  return f;
}

YearRange year_range_of(std::span<const Timestamp> times) {
  if (times.empty()) throw DataError("year range of an empty set");
  YearRange r{utc_fields(times[0]).year, utc_fields(times[0]).year};
  for (Timestamp t : times) {
    const int y = utc_fields(t).year;
    r.min_year = std::min(r.min_year, y);
    r.max_year = std::max(r.max_year, y);
  }
  return r;
}

SparseVector TimeEncoding::to_sparse() const {
  SparseVector v;
  v.push(static_cast<std::uint32_t>(minute), 1.0);
  v.push(static_cast<std::uint32_t>(kMinuteBlock + hour), 1.0);
  v.push(static_cast<std::uint32_t>(kMinuteBlock + kHourBlock + weekday), 1.0);
  v.push(static_cast<std::uint32_t>(kMinuteBlock + kHourBlock + kWeekdayBlock +
                                    year_index),
         1.0);
  return v;
}

TimeEncoding time_onehot(Timestamp t, const YearRange& years) {
  const UtcFields f = utc_fields(t);
  TimeEncoding e;
  e.minute = static_cast<std::size_t>(f.minute);
  e.hour = static_cast<std::size_t>(f.hour);
  e.weekday = static_cast<std::size_t>(f.weekday);
  const int y = std::clamp(f.year, years.min_year, years.max_year);
  e.year_clamped = y != f.year;
  e.year_index = static_cast<std::size_t>(y - years.min_year);
  return e;
}

SparseVector pair_time_features(Timestamp self, Timestamp other,
                                const YearRange& years) {
  SparseVector v = time_onehot(self, years).to_sparse();
  v.append_shifted(time_onehot(other, years).to_sparse(),
                   static_cast<std::uint32_t>(TimeEncoding::dim(years)));
  return v;
}

Label earlier_baseline(Timestamp created_a, Timestamp created_b,
                       Rng& tie_rng) {
  if (created_a < created_b) return Label::kAWins;
  if (created_b < created_a) return Label::kBWins;
  return tie_rng.coin() ? Label::kAWins : Label::kBWins;
}

}  // namespace pairrank
