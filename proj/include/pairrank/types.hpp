#ifndef PAIRRANK_TYPES_HPP_
#define PAIRRANK_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pairrank {

using Timestamp = std::int64_t;  // seconds since the Unix epoch, UTC

inline constexpr const char* kDeletedAuthor = "[deleted]";
inline constexpr Timestamp kSecondsPerDay = 86400;

struct Submission {
  std::string id;
  std::string author;
  std::string community;
  Timestamp created_utc = 0;
  std::int64_t score = 0;
  std::string title;
  std::optional<std::string> image_ref;
  std::optional<std::string> link_key;

  bool operator==(const Submission&) const = default;
};

struct Comment {
  std::string id;
  std::string author;
  std::string link_id;    // submission id of the thread
  std::string parent_id;  // submission id or comment id
  Timestamp created_utc = 0;
  std::int64_t score = 0;
  std::string body;

  bool operator==(const Comment&) const = default;
};

enum class Label { kAWins, kBWins };

inline Label flip(Label l) {
  return l == Label::kAWins ? Label::kBWins : Label::kAWins;
}

// +1 when slot a won, -1 otherwise.
inline double label_sign(Label l) { return l == Label::kAWins ? 1.0 : -1.0; }

struct RankedPair {
  std::string pair_id;
  std::string id_a;
  std::string id_b;
  std::int64_t gap_seconds = 0;
  Label label = Label::kAWins;
  std::int64_t score_a = 0;
  std::int64_t score_b = 0;

  bool operator==(const RankedPair&) const = default;
};

}  // namespace pairrank

#endif  // PAIRRANK_TYPES_HPP_
