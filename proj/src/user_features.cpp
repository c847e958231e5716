#include "pairrank/user_features.hpp"

#include <algorithm>
#include <unordered_set>

#include "pairrank/error.hpp"
#include "pairrank/ingest.hpp"
#include "pairrank/text_features.hpp"

namespace pairrank {
namespace {

template <typename T>
void require_sorted(std::span<const T> items, const char* what) {
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].created_utc < items[i - 1].created_utc) {
      throw DataError(std::string(what) + " are not sorted by created_utc (at '" +
                      items[i].id + "')");
    }
  }
}

std::array<std::int64_t, 4> k_flags(std::int64_t score) {
  std::array<std::int64_t, 4> f{};
  for (std::size_t k = 0; k < kQualityThresholds.size(); ++k) {
    f[k] = score > kQualityThresholds[k] ? 1 : 0;
  }
  return f;
}

std::size_t count_before(const std::vector<Timestamp>& sorted, Timestamp t) {
  return static_cast<std::size_t>(
      std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double ratio_or_sentinel(double num, double den) {
  return den > 0 ? num / den : kImputeSentinel;
}

}  // namespace

UserHistory UserHistory::build(std::span<const Submission> subs,
                               std::span<const Comment> comments) {
  require_sorted(subs, "submissions");
  require_sorted(comments, "comments");

  std::unordered_map<std::string, std::size_t> sub_index;
  for (std::size_t i = 0; i < subs.size(); ++i) sub_index.emplace(subs[i].id, i);
  std::unordered_map<std::string, std::size_t> comment_index;
  for (std::size_t i = 0; i < comments.size(); ++i) {
    comment_index.emplace(comments[i].id, i);
  }
  auto find_sub = [&](const std::string& id) -> const Submission* {
    auto it = sub_index.find(strip_kind_prefix(id));
    return it == sub_index.end() ? nullptr : &subs[it->second];
  };
  auto find_comment = [&](const std::string& id) -> std::optional<std::size_t> {
    auto it = comment_index.find(strip_kind_prefix(id));
    if (it == comment_index.end()) return std::nullopt;
    return it->second;
  };

  // Depth: 1 for top-level comments, parent + 1 otherwise, 0 = unresolved.
  std::vector<int> depth(comments.size(), -1);
  std::vector<Timestamp> first_reply(comments.size(),
                                     std::numeric_limits<Timestamp>::max());
  for (std::size_t i = 0; i < comments.size(); ++i) {
    // Walk up until a memoized comment, the thread root, or a dead end.
    std::vector<std::size_t> chain;
    std::size_t cur = i;
    bool resolved = false;
    int d = 0;
    while (true) {
      if (depth[cur] >= 0) {
        resolved = depth[cur] > 0;
        d = depth[cur];
        break;
      }
      if (chain.size() > comments.size()) break;  // cycle
      chain.push_back(cur);
      const auto& c = comments[cur];
      if (find_sub(c.parent_id) != nullptr) {
        resolved = true;
        d = 0;
        break;
      }
      auto parent = find_comment(c.parent_id);
      if (!parent) break;
      cur = *parent;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      depth[*it] = resolved ? ++d : 0;
    }
    if (auto parent = find_comment(comments[i].parent_id)) {
      first_reply[*parent] =
          std::min(first_reply[*parent], comments[i].created_utc);
    }
  }

  UserHistory h;
  for (const auto& s : subs) {
    auto& log = h.logs_[s.author];
    if (log.post_k_prefix.empty()) log.post_k_prefix.push_back({});
    log.post_times.push_back(s.created_utc);
    auto next = log.post_k_prefix.back();
    const auto f = k_flags(s.score);
    for (std::size_t k = 0; k < 4; ++k) next[k] += f[k];
    log.post_k_prefix.push_back(next);
  }

  // (thread submission index, author) -> own comment times in that thread.
  std::unordered_map<std::size_t, std::vector<Timestamp>> self_comments;
  for (std::size_t i = 0; i < comments.size(); ++i) {
    const auto& c = comments[i];
    auto& log = h.logs_[c.author];
    if (log.comment_k_prefix.empty()) {
      log.comment_k_prefix.push_back({});
      log.length_prefix.push_back(0.0);
      log.ttr_prefix.push_back(0.0);
      log.depth_prefix.push_back(0.0);
      log.depth_count_prefix.push_back(0);
    }
    log.comment_times.push_back(c.created_utc);
    auto next = log.comment_k_prefix.back();
    const auto f = k_flags(c.score);
    for (std::size_t k = 0; k < 4; ++k) next[k] += f[k];
    log.comment_k_prefix.push_back(next);

    const auto st = structural_features(c.body);
    log.length_prefix.push_back(log.length_prefix.back() + st[0]);
    log.ttr_prefix.push_back(log.ttr_prefix.back() + st[2]);
    if (depth[i] > 0) {
      log.depth_prefix.push_back(log.depth_prefix.back() + depth[i]);
      log.depth_count_prefix.push_back(log.depth_count_prefix.back() + 1);
    } else {
      ++h.unresolved_depth_;
      log.depth_prefix.push_back(log.depth_prefix.back());
      log.depth_count_prefix.push_back(log.depth_count_prefix.back());
    }

    const Submission* thread = find_sub(c.link_id);
    log.latencies.push_back(
        thread ? static_cast<double>(c.created_utc - thread->created_utc)
               : std::numeric_limits<double>::quiet_NaN());
    if (first_reply[i] != std::numeric_limits<Timestamp>::max()) {
      log.reply_realized.push_back(std::max(c.created_utc, first_reply[i]));
    }
    if (thread && thread->author == c.author) {
      auto idx = sub_index.at(thread->id);
      self_comments[idx].push_back(c.created_utc);
    }
  }
  for (auto& [idx, times] : self_comments) {
    if (times.size() >= 2) {
      // Comments arrive sorted, so times[1] is the second one.
      h.logs_[subs[idx].author].multi_comment_realized.push_back(
          std::max(times[1], subs[idx].created_utc));
    }
  }
  for (auto& [author, log] : h.logs_) {
    std::sort(log.reply_realized.begin(), log.reply_realized.end());
    std::sort(log.multi_comment_realized.begin(),
              log.multi_comment_realized.end());
  }
  return h;
}

UserHistorySnapshot UserHistory::snapshot(const std::string& author,
                                          Timestamp as_of) const {
  UserHistorySnapshot s;
  s.author = author;
  s.as_of = as_of;
  s.deleted = author == kDeletedAuthor;
  auto it = logs_.find(author);
  if (s.deleted || it == logs_.end()) return s;
  const AuthorLog& log = it->second;

  const std::size_t np = count_before(log.post_times, as_of);
  const std::size_t nc = count_before(log.comment_times, as_of);
  s.n_prev_posts = static_cast<std::int64_t>(np);
  s.n_prev_comments = static_cast<std::int64_t>(nc);
  if (np > 0) {
    s.first_seen = log.post_times.front();
    s.last_interaction = log.post_times[np - 1];
    s.k_counts_posts = log.post_k_prefix[np];
  }
  if (nc > 0) {
    const Timestamp first_c = log.comment_times.front();
    const Timestamp last_c = log.comment_times[nc - 1];
    s.first_seen = s.first_seen ? std::min(*s.first_seen, first_c) : first_c;
    s.last_interaction =
        s.last_interaction ? std::max(*s.last_interaction, last_c) : last_c;
    s.k_counts_comments = log.comment_k_prefix[nc];
    s.comment_length_sum = log.length_prefix[nc];
    s.comment_ttr_sum = log.ttr_prefix[nc];
    s.comment_depth_sum = log.depth_prefix[nc];
    s.n_comments_with_depth = log.depth_count_prefix[nc];
    for (std::size_t i = 0; i < nc; ++i) {
      if (!std::isnan(log.latencies[i])) {
        s.response_latencies.push_back(log.latencies[i]);
      }
    }
  }
  s.n_comments_with_replies =
      static_cast<std::int64_t>(count_before(log.reply_realized, as_of));
  s.n_prev_submissions_with_multi_comment =
      static_cast<std::int64_t>(count_before(log.multi_comment_realized, as_of));
  return s;
}

std::array<double, kActivityDim> activity_features(
    const UserHistorySnapshot& s) {
  std::array<double, kActivityDim> f;
  f.fill(kImputeSentinel);
  const double posts = static_cast<double>(s.n_prev_posts);
  const double total = posts + static_cast<double>(s.n_prev_comments);
  if (s.deleted || total == 0) return f;
  f[0] = total;
  f[1] = static_cast<double>(s.as_of - *s.first_seen);
  f[2] = static_cast<double>(s.as_of - *s.last_interaction);
  f[3] = posts / total;
  return f;
}

std::array<double, kTypeDim> type_features(const UserHistorySnapshot& s) {
  std::array<double, kTypeDim> f;
  f.fill(kImputeSentinel);
  if (s.deleted) return f;
  const double nc = static_cast<double>(s.n_prev_comments);
  f[0] = ratio_or_sentinel(s.comment_length_sum, nc);
  f[1] = ratio_or_sentinel(s.comment_ttr_sum, nc);
  f[2] = ratio_or_sentinel(s.comment_depth_sum,
                           static_cast<double>(s.n_comments_with_depth));
  f[3] = ratio_or_sentinel(static_cast<double>(s.n_comments_with_replies), nc);
  f[4] = ratio_or_sentinel(
      static_cast<double>(s.n_prev_submissions_with_multi_comment),
      static_cast<double>(s.n_prev_posts));
  if (!s.response_latencies.empty()) f[5] = median(s.response_latencies);
  return f;
}

std::array<double, kQualityDim> quality_features(const UserHistorySnapshot& s) {
  std::array<double, kQualityDim> f;
  f.fill(kImputeSentinel);
  if (s.deleted) return f;
  auto fill = [&](std::size_t base, const std::array<std::int64_t, 4>& counts,
                  std::int64_t total) {
    for (std::size_t k = 0; k < 4; ++k) {
      f[base + k] = static_cast<double>(counts[k]);
      f[base + 4 + k] = ratio_or_sentinel(static_cast<double>(counts[k]),
                                          static_cast<double>(total));
    }
  };
  fill(0, s.k_counts_posts, s.n_prev_posts);
  fill(8, s.k_counts_comments, s.n_prev_comments);
  return f;
}

ImputationMeans fit_imputation(std::span<const std::vector<double>> rows,
                               std::size_t dim) {
  std::vector<double> sum(dim, 0.0);
  std::vector<std::size_t> n(dim, 0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (!is_sentinel(r[j])) {
        sum[j] += r[j];
        ++n[j];
      }
    }
  }
  ImputationMeans m;
  m.means.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    m.means[j] = n[j] ? sum[j] / static_cast<double>(n[j]) : kImputeSentinel;
  }
  return m;
}

std::vector<double> impute(std::span<const double> vec,
                           const ImputationMeans& means) {
  if (vec.size() != means.means.size()) {
    throw DataError("imputation: vector/means dimension mismatch");
  }
  std::vector<double> out(vec.begin(), vec.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (!is_sentinel(out[j])) continue;
    if (is_sentinel(means.means[j])) {
      throw DataError("imputation: feature " + std::to_string(j) +
                      " has no training mean (degenerate training split)");
    }
    out[j] = means.means[j];
  }
  return out;
}

}  // namespace pairrank
