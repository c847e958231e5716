#ifndef PAIRRANK_PAIRING_HPP_
#define PAIRRANK_PAIRING_HPP_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include "pairrank/types.hpp"

namespace pairrank {

struct PairConfig {
  std::int64_t max_window = 30;  // seconds
  std::int64_t min_score_diff = 20;
  double min_ratio = 2.0;
  std::int64_t min_score = 2;

  // Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

// Score constraints only (window excluded). Equal scores never qualify.
bool scores_eligible(std::int64_t a, std::int64_t b, const PairConfig& cfg);

// Time-controlled greedy matching. Candidates are all eligible in-window
// pairs, accepted in ascending (gap, created_utc of the earlier member,
// earlier id, later id) order whenever both ends are still free. Output is
// ordered by the earlier member's time; slots a/b are assigned by a seeded
// coin per pair.
std::vector<RankedPair> sample_pairs(const std::vector<Submission>& subs,
                                     const PairConfig& cfg,
                                     std::uint64_t seed);

// Control sampler without time matching: within each UTC day, members are
// shuffled and each free item is paired with the next free item that
// satisfies the score constraints. max_window is ignored.
std::vector<RankedPair> sample_same_day_random_pairs(
    const std::vector<Submission>& subs, const PairConfig& cfg,
    std::uint64_t seed);

struct PairStats {
  std::size_t count = 0;
  double mean_gap = 0.0;
  double median_gap = 0.0;
  double mean_score_diff = 0.0;
  double median_score_diff = 0.0;
};

// Throws DataError on an empty list.
PairStats pair_stats(const std::vector<RankedPair>& pairs);

void write_pairs(std::ostream& out, const std::vector<RankedPair>& pairs);
void write_pairs(const std::filesystem::path& path,
                 const std::vector<RankedPair>& pairs);
// Throws DataError naming the line on malformed rows.
std::vector<RankedPair> read_pairs(std::istream& in);
std::vector<RankedPair> read_pairs(const std::filesystem::path& path);

}  // namespace pairrank

#endif  // PAIRRANK_PAIRING_HPP_
