#include "pairrank/pairing.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "pairrank/error.hpp"
#include "pairrank/ingest.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {
namespace {

constexpr const char* kPairsHeader =
    "pair_id,id_a,id_b,label,gap_seconds,score_a,score_b";

struct Candidate {
  std::int64_t gap;
  std::size_t early;  // positions in the time-sorted eligible list
  std::size_t late;
};

std::vector<std::size_t> eligible_by_time(const std::vector<Submission>& subs,
                                          const PairConfig& cfg) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i].score >= cfg.min_score) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return std::tie(subs[x].created_utc, subs[x].id) <
           std::tie(subs[y].created_utc, subs[y].id);
  });
  return idx;
}

RankedPair make_pair(const Submission& early, const Submission& late,
                     bool swap_slots) {
  const Submission& a = swap_slots ? late : early;
  const Submission& b = swap_slots ? early : late;
  RankedPair p;
  p.id_a = a.id;
  p.id_b = b.id;
  p.score_a = a.score;
  p.score_b = b.score;
  p.gap_seconds = late.created_utc - early.created_utc;
  p.label = a.score > b.score ? Label::kAWins : Label::kBWins;
  return p;
}

std::string pair_id(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%06zu", k);
  return buf;
}

// Emits (early, late) submission index pairs in the canonical output order
// with seeded slot assignment.
std::vector<RankedPair> emit(const std::vector<Submission>& subs,
                             std::vector<std::pair<std::size_t, std::size_t>>
                                 matched,
                             std::uint64_t seed) {
  std::sort(matched.begin(), matched.end(), [&](const auto& x, const auto& y) {
    const auto& a = subs[x.first];
    const auto& b = subs[y.first];
    return std::tie(a.created_utc, a.id, subs[x.second].id) <
           std::tie(b.created_utc, b.id, subs[y.second].id);
  });
  Rng rng(seed);
  std::vector<RankedPair> out;
  out.reserve(matched.size());
  for (const auto& [e, l] : matched) {
    RankedPair p = make_pair(subs[e], subs[l], rng.coin());
    p.pair_id = pair_id(out.size());
    out.push_back(std::move(p));
  }
  return out;
}

template <typename T>
double median_of(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return static_cast<double>(v[n / 2]);
  return 0.5 * (static_cast<double>(v[n / 2 - 1]) +
                static_cast<double>(v[n / 2]));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::int64_t parse_int(const std::string& s) {
  std::size_t pos = 0;
  const long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

}  // namespace

void PairConfig::validate() const {
  if (max_window <= 0) throw std::invalid_argument("max_window must be > 0");
  if (!(min_ratio >= 1.0)) throw std::invalid_argument("min_ratio must be >= 1");
  if (min_score_diff < 0) {
    throw std::invalid_argument("min_score_diff must be >= 0");
  }
}

bool scores_eligible(std::int64_t a, std::int64_t b, const PairConfig& cfg) {
  if (a < cfg.min_score || b < cfg.min_score || a == b) return false;
  const std::int64_t hi = std::max(a, b);
  const std::int64_t lo = std::min(a, b);
  if (hi - lo < cfg.min_score_diff) return false;
  return static_cast<double>(hi) >= cfg.min_ratio * static_cast<double>(lo);
}

std::vector<RankedPair> sample_pairs(const std::vector<Submission>& subs,
                                     const PairConfig& cfg,
                                     std::uint64_t seed) {
  cfg.validate();
  const auto order = eligible_by_time(subs, cfg);
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& a = subs[order[i]];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& b = subs[order[j]];
      const std::int64_t gap = b.created_utc - a.created_utc;
      if (gap > cfg.max_window) break;
      if (scores_eligible(a.score, b.score, cfg)) {
        candidates.push_back({gap, i, j});
      }
    }
  }
  // Positions in `order` already encode (created_utc, id) order, so the tie
  // break on (created_utc_a, id_a, id_b) reduces to comparing positions.
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) {
              return std::tie(x.gap, x.early, x.late) <
                     std::tie(y.gap, y.early, y.late);
            });
  std::vector<bool> used(order.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> matched;
  for (const auto& c : candidates) {
    if (used[c.early] || used[c.late]) continue;
    used[c.early] = used[c.late] = true;
    matched.emplace_back(order[c.early], order[c.late]);
  }
  return emit(subs, std::move(matched), seed);
}

std::vector<RankedPair> sample_same_day_random_pairs(
    const std::vector<Submission>& subs, const PairConfig& cfg,
    std::uint64_t seed) {
  constexpr std::size_t kMaxScan = 256;
  const auto order = eligible_by_time(subs, cfg);
  std::map<std::int64_t, std::vector<std::size_t>> by_day;
  for (auto i : order) by_day[utc_day(subs[i].created_utc)].push_back(i);

  Rng rng(mix64(seed, 0x5a17));
  std::vector<std::pair<std::size_t, std::size_t>> matched;
  for (auto& [day, members] : by_day) {
    rng.shuffle(members);
    std::vector<bool> used(members.size(), false);
    for (std::size_t x = 0; x < members.size(); ++x) {
      if (used[x]) continue;
      const std::size_t stop = std::min(members.size(), x + 1 + kMaxScan);
      for (std::size_t y = x + 1; y < stop; ++y) {
        if (used[y]) continue;
        const auto& a = subs[members[x]];
        const auto& b = subs[members[y]];
        if (!scores_eligible(a.score, b.score, cfg)) continue;
        used[x] = used[y] = true;
        const bool a_first = std::tie(a.created_utc, a.id) <
                             std::tie(b.created_utc, b.id);
        matched.emplace_back(a_first ? members[x] : members[y],
                             a_first ? members[y] : members[x]);
        break;
      }
    }
  }
  return emit(subs, std::move(matched), seed);
}

PairStats pair_stats(const std::vector<RankedPair>& pairs) {
  if (pairs.empty()) throw DataError("pair statistics need at least one pair");
  std::vector<std::int64_t> gaps;
  std::vector<std::int64_t> diffs;
  for (const auto& p : pairs) {
    gaps.push_back(p.gap_seconds);
    diffs.push_back(std::abs(p.score_a - p.score_b));
  }
  const double n = static_cast<double>(pairs.size());
  PairStats s;
  s.count = pairs.size();
  s.mean_gap = std::accumulate(gaps.begin(), gaps.end(), 0.0) / n;
  s.mean_score_diff = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
  s.median_gap = median_of(std::move(gaps));
  s.median_score_diff = median_of(std::move(diffs));
  return s;
}

void write_pairs(std::ostream& out, const std::vector<RankedPair>& pairs) {
  out << kPairsHeader << '\n';
  for (const auto& p : pairs) {
    for (const auto* id : {&p.pair_id, &p.id_a, &p.id_b}) {
      if (id->find_first_of(",\n\r\"") != std::string::npos) {
        throw DataError("id '" + *id + "' cannot be written to a pairs file");
      }
    }
    out << p.pair_id << ',' << p.id_a << ',' << p.id_b << ','
        << (p.label == Label::kAWins ? 'a' : 'b') << ',' << p.gap_seconds
        << ',' << p.score_a << ',' << p.score_b << '\n';
  }
}

void write_pairs(const std::filesystem::path& path,
                 const std::vector<RankedPair>& pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_pairs(out, pairs);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<RankedPair> read_pairs(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != split_csv(kPairsHeader)) {
    throw DataError("pairs file: missing or wrong header");
  }
  std::vector<RankedPair> pairs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    const std::string where = "pairs file line " + std::to_string(line_no);
    if (f.size() != 7) throw DataError(where + ": expected 7 fields");
    RankedPair p;
    p.pair_id = f[0];
    p.id_a = f[1];
    p.id_b = f[2];
    if (f[3] == "a") {
      p.label = Label::kAWins;
    } else if (f[3] == "b") {
      p.label = Label::kBWins;
    } else {
      throw DataError(where + ": label must be 'a' or 'b'");
    }
    try {
      p.gap_seconds = parse_int(f[4]);
      p.score_a = parse_int(f[5]);
      p.score_b = parse_int(f[6]);
    } catch (const std::exception&) {
      throw DataError(where + ": bad integer field");
    }
    if (p.pair_id.empty() || p.id_a.empty() || p.id_b.empty()) {
      throw DataError(where + ": empty id");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<RankedPair> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_pairs(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace pairrank
