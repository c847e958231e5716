#ifndef PAIRRANK_USER_FEATURES_HPP_
#define PAIRRANK_USER_FEATURES_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairrank/types.hpp"

namespace pairrank {

// Missing-value marker inside dense user feature vectors.
inline constexpr double kImputeSentinel =
    std::numeric_limits<double>::quiet_NaN();

inline bool is_sentinel(double v) { return std::isnan(v); }

inline constexpr std::array<std::int64_t, 4> kQualityThresholds = {5, 10, 50,
                                                                   100};

// An author's activity strictly before `as_of`.
struct UserHistorySnapshot {
  std::string author;
  Timestamp as_of = 0;
  bool deleted = false;
  std::int64_t n_prev_posts = 0;
  std::int64_t n_prev_comments = 0;
  std::optional<Timestamp> first_seen;
  std::optional<Timestamp> last_interaction;
  double comment_length_sum = 0.0;  // tokens
  double comment_ttr_sum = 0.0;
  double comment_depth_sum = 0.0;
  std::int64_t n_comments_with_depth = 0;
  std::int64_t n_comments_with_replies = 0;
  // Own prior submissions in whose thread the author commented at least
  // twice (both comments before as_of).
  std::int64_t n_prev_submissions_with_multi_comment = 0;
  // Seconds from thread start for each prior comment with a known thread.
  std::vector<double> response_latencies;
  // Prior items scoring strictly above each of kQualityThresholds.
  std::array<std::int64_t, 4> k_counts_posts{};
  std::array<std::int64_t, 4> k_counts_comments{};
};

// Queryable, immutable per-author event history for one community.
class UserHistory {
 public:
  // Both sequences must be sorted by created_utc (DataError otherwise).
  // Comment trees are resolved through parent_id/link_id; ids may carry
  // the "t1_"/"t3_" prefixes of raw dumps.
  static UserHistory build(std::span<const Submission> subs,
                           std::span<const Comment> comments);

  UserHistorySnapshot snapshot(const std::string& author, Timestamp as_of) const;

  // Comments whose depth could not be resolved (dangling parent chain).
  std::size_t unresolved_depth_count() const { return unresolved_depth_; }

 private:
  struct AuthorLog {
    std::vector<Timestamp> post_times;
    std::vector<std::array<std::int64_t, 4>> post_k_prefix;  // size n+1
    std::vector<Timestamp> comment_times;
    std::vector<std::array<std::int64_t, 4>> comment_k_prefix;  // size n+1
    std::vector<double> length_prefix;  // size n+1
    std::vector<double> ttr_prefix;
    std::vector<double> depth_prefix;
    std::vector<std::int64_t> depth_count_prefix;
    std::vector<double> latencies;  // NaN when the thread is unknown
    std::vector<Timestamp> reply_realized;  // sorted
    // Per own post: time its thread gained the author's second comment.
    std::vector<Timestamp> multi_comment_realized;  // sorted
  };

  std::unordered_map<std::string, AuthorLog> logs_;
  std::size_t unresolved_depth_ = 0;
};

inline constexpr std::size_t kActivityDim = 4;
inline constexpr std::size_t kTypeDim = 6;
inline constexpr std::size_t kQualityDim = 16;

// [prior posts + comments, seconds since first seen, seconds since last
//  interaction, posts / (posts + comments)].
std::array<double, kActivityDim> activity_features(const UserHistorySnapshot& s);

// [mean comment tokens, mean comment type/token ratio, mean comment depth
//  (top level = 1), fraction of comments with replies, fraction of own
//  submissions with repeated self-comments, median response latency].
std::array<double, kTypeDim> type_features(const UserHistorySnapshot& s);

// For posts then comments: four k-indices followed by four k-rates.
std::array<double, kQualityDim> quality_features(const UserHistorySnapshot& s);

struct ImputationMeans {
  std::vector<double> means;  // NaN where the training split had no value
};

// Column means over non-sentinel values.
ImputationMeans fit_imputation(std::span<const std::vector<double>> rows,
                               std::size_t dim);

// Throws DataError when a sentinel has no training mean.
std::vector<double> impute(std::span<const double> vec,
                           const ImputationMeans& means);

}  // namespace pairrank

#endif  // PAIRRANK_USER_FEATURES_HPP_
