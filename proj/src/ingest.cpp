#include "pairrank/ingest.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "pairrank/error.hpp"

namespace pairrank {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kMaxDiagnostics = 20;

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw std::invalid_argument(std::string("missing string field '") + key +
                                "'");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw std::invalid_argument(std::string("field '") + key +
                                "' is not a string");
  }
  std::string v = it->get<std::string>();
  if (v.empty()) return std::nullopt;
  return v;
}

// Scraped dumps carry integers, floats and occasionally numeric strings.
std::int64_t require_integer(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  }
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (!std::isfinite(v)) {
      throw std::invalid_argument(std::string("non-finite '") + key + "'");
    }
    return static_cast<std::int64_t>(std::floor(v));
  }
  if (it->is_string()) {
    const std::string s = it->get<std::string>();
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) {
      throw std::invalid_argument(std::string("bad integer in '") + key + "'");
    }
    return v;
  }
  throw std::invalid_argument(std::string("field '") + key +
                              "' is not a number");
}

Submission submission_from_json(const json& j) {
  Submission s;
  s.id = require_string(j, "id");
  s.author = require_string(j, "author");
  s.community = require_string(j, "subreddit");
  s.created_utc = require_integer(j, "created_utc");
  s.score = require_integer(j, "score");
  s.title = require_string(j, "title");
  s.image_ref = optional_string(j, "image");
  s.link_key = optional_string(j, "link_key");
  if (s.id.empty()) throw std::invalid_argument("empty id");
  if (s.created_utc <= 0) throw std::invalid_argument("created_utc <= 0");
  return s;
}

Comment comment_from_json(const json& j) {
  Comment c;
  c.id = require_string(j, "id");
  c.author = require_string(j, "author");
  c.link_id = require_string(j, "link_id");
  c.parent_id = require_string(j, "parent_id");
  c.created_utc = require_integer(j, "created_utc");
  c.score = require_integer(j, "score");
  c.body = require_string(j, "body");
  if (c.id.empty()) throw std::invalid_argument("empty id");
  if (c.created_utc <= 0) throw std::invalid_argument("created_utc <= 0");
  return c;
}

template <typename Record, typename Convert>
ParseResult<Record> parse_lines(std::istream& in, const ParseOptions& opts,
                                Convert convert, const char* what) {
  ParseResult<Record> result;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  std::size_t non_blank = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++non_blank;
    std::string reason;
    try {
      Record r = convert(json::parse(line));
      if (seen.contains(r.id)) {
        reason = "duplicate id '" + r.id + "'";
      } else {
        seen.emplace(r.id, result.records.size());
        result.records.push_back(std::move(r));
        continue;
      }
    } catch (const std::exception& e) {
      reason = e.what();
    }
    ++result.skipped;
    if (result.diagnostics.size() < kMaxDiagnostics) {
      result.diagnostics.push_back("line " + std::to_string(line_no) + ": " +
                                   reason);
    }
  }
  if (in.bad()) {
    throw std::runtime_error(std::string("I/O error reading ") + what);
  }
  if (non_blank > 0) {
    const double rate =
        static_cast<double>(result.skipped) / static_cast<double>(non_blank);
    if (rate > opts.max_error_rate) {
      std::string msg = std::string(what) + ": " +
                        std::to_string(result.skipped) + " of " +
                        std::to_string(non_blank) +
                        " lines malformed, above the allowed rate";
      if (!result.diagnostics.empty()) msg += " (" + result.diagnostics[0] + ")";
      throw DataError(msg);
    }
  }
  return result;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream create_or_throw(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

ParseResult<Submission> parse_submissions(std::istream& in,
                                          const ParseOptions& opts) {
  return parse_lines<Submission>(in, opts, submission_from_json,
                                 "submissions");
}

ParseResult<Comment> parse_comments(std::istream& in,
                                    const ParseOptions& opts) {
  return parse_lines<Comment>(in, opts, comment_from_json, "comments");
}

ParseResult<Submission> read_submissions(const std::filesystem::path& path,
                                         const ParseOptions& opts) {
  auto in = open_or_throw(path);
  try {
    return parse_submissions(in, opts);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ParseResult<Comment> read_comments(const std::filesystem::path& path,
                                   const ParseOptions& opts) {
  auto in = open_or_throw(path);
  try {
    return parse_comments(in, opts);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_submission(std::ostream& out, const Submission& s) {
  ordered_json j;
  j["id"] = s.id;
  j["author"] = s.author;
  j["subreddit"] = s.community;
  j["created_utc"] = s.created_utc;
  j["score"] = s.score;
  j["title"] = s.title;
  if (s.image_ref) j["image"] = *s.image_ref;
  if (s.link_key) j["link_key"] = *s.link_key;
  out << j.dump() << '\n';
}

void write_comment(std::ostream& out, const Comment& c) {
  ordered_json j;
  j["id"] = c.id;
  j["author"] = c.author;
  j["link_id"] = c.link_id;
  j["parent_id"] = c.parent_id;
  j["created_utc"] = c.created_utc;
  j["score"] = c.score;
  j["body"] = c.body;
  out << j.dump() << '\n';
}

void write_submissions(const std::filesystem::path& path,
                       const std::vector<Submission>& subs) {
  auto out = create_or_throw(path);
  for (const auto& s : subs) write_submission(out, s);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_comments(const std::filesystem::path& path,
                    const std::vector<Comment>& comments) {
  auto out = create_or_throw(path);
  for (const auto& c : comments) write_comment(out, c);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::int64_t utc_day(Timestamp t) {
  std::int64_t d = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --d;
  return d;
}

std::vector<Submission> filter_active_days(const std::vector<Submission>& subs,
                                           int threshold) {
  std::unordered_map<std::int64_t, std::int64_t> per_day;
  for (const auto& s : subs) ++per_day[utc_day(s.created_utc)];
  std::vector<Submission> out;
  for (const auto& s : subs) {
    if (per_day[utc_day(s.created_utc)] > threshold) out.push_back(s);
  }
  return out;
}

std::vector<Submission> filter_active_days_by_community(
    const std::vector<Submission>& subs, int threshold) {
  std::map<std::pair<std::string, std::int64_t>, std::int64_t> per_day;
  for (const auto& s : subs) ++per_day[{s.community, utc_day(s.created_utc)}];
  std::vector<Submission> out;
  for (const auto& s : subs) {
    if (per_day[{s.community, utc_day(s.created_utc)}] > threshold) {
      out.push_back(s);
    }
  }
  return out;
}

std::string strip_kind_prefix(const std::string& id) {
  if (id.size() > 3 && id[0] == 't' && (id[1] == '1' || id[1] == '3') &&
      id[2] == '_') {
    return id.substr(3);
  }
  return id;
}

std::vector<std::string> find_orphan_comments(
    const std::vector<Comment>& comments,
    const std::unordered_set<std::string>& submission_ids) {
  std::vector<std::string> orphans;
  for (const auto& c : comments) {
    if (!submission_ids.contains(strip_kind_prefix(c.link_id))) orphans.push_back(c.id);
  }
  return orphans;
}

}  // namespace pairrank
