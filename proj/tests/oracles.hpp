#ifndef PAIRRANK_TESTS_ORACLES_HPP_
#define PAIRRANK_TESTS_ORACLES_HPP_

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "pairrank/pairing.hpp"
#include "pairrank/types.hpp"
#include "pairrank/rng.hpp"
#include "pairrank/user_features.hpp"
#include "test_util.hpp"

namespace pairrank::oracle {

// Total acceptance key: (gap, earlier time, earlier id, later id).
using EdgeKey = std::tuple<std::int64_t, Timestamp, std::string, std::string>;

inline EdgeKey edge_key(const Submission& x, const Submission& y) {
  const bool x_first = std::tie(x.created_utc, x.id) < std::tie(y.created_utc, y.id);
  const auto& e = x_first ? x : y;
  const auto& l = x_first ? y : x;
  return {l.created_utc - e.created_utc, e.created_utc, e.id, l.id};
}

// Lexicographically smallest sorted key vector over all maximal matchings
// of the eligible in-window candidates, by exhaustive search.
inline std::vector<EdgeKey> best_matching_keys(const std::vector<Submission>& s,
                                               const PairConfig& cfg) {
  struct Edge {
    std::size_t i, j;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (std::abs(s[i].created_utc - s[j].created_utc) > cfg.max_window) continue;
      const auto lo = std::min(s[i].score, s[j].score), hi = std::max(s[i].score, s[j].score);
      if (lo < cfg.min_score || hi - lo < cfg.min_score_diff || lo == hi) continue;
      if (static_cast<double>(hi) < cfg.min_ratio * static_cast<double>(lo)) continue;
      edges.push_back({i, j});
    }
  }
  std::vector<EdgeKey> best, chosen;
  bool have = false;
  std::vector<bool> used(s.size(), false);
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == edges.size()) {
      for (const auto& e : edges) {
        if (!used[e.i] && !used[e.j]) return;  // not maximal
      }
      auto g = chosen;
      std::sort(g.begin(), g.end());
      if (!have || g < best) {
        best = g;
        have = true;
      }
      return;
    }
    const auto& e = edges[k];
    if (!used[e.i] && !used[e.j]) {
      used[e.i] = used[e.j] = true;
      chosen.push_back(edge_key(s[e.i], s[e.j]));
      rec(k + 1);
      chosen.pop_back();
      used[e.i] = used[e.j] = false;
    }
    rec(k + 1);
  };
  rec(0);
  return best;
}

inline std::vector<EdgeKey> emitted_keys(const std::vector<Submission>& subs,
                                         const std::vector<RankedPair>& pairs) {
  std::map<std::string, const Submission*> by_id;
  for (const auto& s : subs) by_id[s.id] = &s;
  std::vector<EdgeKey> keys;
  for (const auto& p : pairs) keys.push_back(edge_key(*by_id.at(p.id_a), *by_id.at(p.id_b)));
  std::sort(keys.begin(), keys.end());
  return keys;
}

// First violated pairing constraint, if any.
inline std::optional<std::string> pair_violation(const std::vector<Submission>& subs,
                                                 const std::vector<RankedPair>& pairs,
                                                 const PairConfig& cfg) {
  std::map<std::string, const Submission*> by_id;
  for (const auto& s : subs) by_id[s.id] = &s;
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    const auto ia = by_id.find(p.id_a), ib = by_id.find(p.id_b);
    if (ia == by_id.end() || ib == by_id.end()) return p.pair_id + ": unknown member";
    const auto& a = *ia->second;
    const auto& b = *ib->second;
    const auto lo = std::min(a.score, b.score), hi = std::max(a.score, b.score);
    if (std::abs(a.created_utc - b.created_utc) > cfg.max_window) return p.pair_id + ": gap";
    if (p.gap_seconds != std::abs(a.created_utc - b.created_utc)) return p.pair_id + ": gap field";
    if (hi - lo < cfg.min_score_diff) return p.pair_id + ": score difference";
    if (static_cast<double>(hi) < cfg.min_ratio * static_cast<double>(lo)) return p.pair_id + ": ratio";
    if (lo < cfg.min_score) return p.pair_id + ": minimum score";
    if (p.score_a != a.score || p.score_b != b.score) return p.pair_id + ": score fields";
    if ((p.label == Label::kAWins) != (a.score > b.score)) return p.pair_id + ": label";
    if (!seen.insert(p.id_a).second || !seen.insert(p.id_b).second) return p.pair_id + ": repeated submission";
  }
  return std::nullopt;
}

// Average ranks by O(n^2) counting, then Pearson on the ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double less = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double m = (static_cast<double>(n) + 1) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - m) * (ry[i] - m);
    sxx += (rx[i] - m) * (rx[i] - m);
    syy += (ry[i] - m) * (ry[i] - m);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Quality features recounted from the raw event lists.
inline std::array<double, kQualityDim> quality_recount(const std::vector<Submission>& subs,
                                                       const std::vector<Comment>& comments,
                                                       const std::string& author, Timestamp as_of) {
  std::array<double, kQualityDim> out{};
  auto fill = [&](std::size_t base, const std::vector<std::int64_t>& scores) {
    for (std::size_t k = 0; k < 4; ++k) {
      const auto c = std::count_if(scores.begin(), scores.end(),
                                   [&](std::int64_t s) { return s > kQualityThresholds[k]; });
      out[base + k] = static_cast<double>(c);
      out[base + 4 + k] =
          scores.empty() ? kImputeSentinel : static_cast<double>(c) / static_cast<double>(scores.size());
    }
  };
  std::vector<std::int64_t> ps, cs;
  for (const auto& s : subs) {
    if (s.author == author && s.created_utc < as_of) ps.push_back(s.score);
  }
  for (const auto& c : comments) {
    if (c.author == author && c.created_utc < as_of) cs.push_back(c.score);
  }
  fill(0, ps);
  fill(8, cs);
  return out;
}

// Random interleaved posts and comments with timestamp ties.
inline Comment make_comment(const std::string& id, const std::string& author, const std::string& link,
                const std::string& parent, Timestamp t, std::int64_t score,
                const std::string& body = "hello") {
  Comment c;
  c.id = id;
  c.author = author;
  c.link_id = link;
  c.parent_id = parent;
  c.created_utc = t;
  c.score = score;
  c.body = body;
  return c;
}

struct History {
  std::vector<Submission> subs;
  std::vector<Comment> comments;
};

inline History random_history(Rng& rng, std::size_t n_events, std::size_t n_authors) {
  History log;
  Timestamp t = 1000;
  for (std::size_t i = 0; i < n_events; ++i) {
    t += static_cast<Timestamp>(rng.index(3));  // ties happen
    const std::string author = "u" + std::to_string(rng.index(n_authors));
    const auto score = static_cast<std::int64_t>(rng.index(130)) - 10;
    if (log.subs.empty() || rng.uniform() < 0.35) {
      log.subs.push_back(test::sub("s" + std::to_string(i), t, score, author));
    } else {
      const auto& thread = log.subs[rng.index(log.subs.size())];
      std::string parent = "t3_" + thread.id;
      std::vector<const Comment*> same_thread;
      for (const auto& c : log.comments) {
        if (c.link_id == "t3_" + thread.id) same_thread.push_back(&c);
      }
      if (!same_thread.empty() && rng.coin()) {
        parent = "t1_" + same_thread[rng.index(same_thread.size())]->id;
      }
      log.comments.push_back(make_comment("c" + std::to_string(i), author, "t3_" + thread.id, parent, t,
                                     score, rng.coin() ? "one two two" : "a b c d e"));
    }
  }
  return log;
}

template <std::size_t N>
bool same_features(const std::array<double, N>& a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) {
    if (std::isnan(a[i]) != std::isnan(b[i])) return false;
    if (!std::isnan(a[i]) && a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace pairrank::oracle

#endif  // PAIRRANK_TESTS_ORACLES_HPP_
