#ifndef PAIRRANK_INGEST_HPP_
#define PAIRRANK_INGEST_HPP_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "pairrank/types.hpp"

namespace pairrank {

struct ParseOptions {
  // Fraction of non-blank lines allowed to be malformed before the whole
  // stream is rejected.
  double max_error_rate = 0.01;
};

template <typename Record>
struct ParseResult {
  std::vector<Record> records;
  std::size_t skipped = 0;
  // "line N: reason" for the first few skipped lines.
  std::vector<std::string> diagnostics;
};

// One JSON object per line. Blank lines are ignored; malformed lines and
// duplicate ids are skipped and counted. Throws DataError when the skip
// rate exceeds the cap.
ParseResult<Submission> parse_submissions(std::istream& in,
                                          const ParseOptions& opts = {});
ParseResult<Comment> parse_comments(std::istream& in,
                                    const ParseOptions& opts = {});

ParseResult<Submission> read_submissions(const std::filesystem::path& path,
                                         const ParseOptions& opts = {});
ParseResult<Comment> read_comments(const std::filesystem::path& path,
                                   const ParseOptions& opts = {});

void write_submission(std::ostream& out, const Submission& s);
void write_comment(std::ostream& out, const Comment& c);
void write_submissions(const std::filesystem::path& path,
                       const std::vector<Submission>& subs);
void write_comments(const std::filesystem::path& path,
                    const std::vector<Comment>& comments);

// UTC calendar day index (days since epoch).
std::int64_t utc_day(Timestamp t);

// Keeps submissions whose UTC day holds strictly more than `threshold`
// submissions. Input is assumed to come from a single community.
std::vector<Submission> filter_active_days(const std::vector<Submission>& subs,
                                           int threshold = 15);

// Applies filter_active_days independently per community, preserving the
// input order.
std::vector<Submission> filter_active_days_by_community(
    const std::vector<Submission>& subs, int threshold = 15);

// Drops a leading "t1_" or "t3_" kind tag from a thing id.
std::string strip_kind_prefix(const std::string& id);

// Ids of comments whose thread is not among `submission_ids`.
std::vector<std::string> find_orphan_comments(
    const std::vector<Comment>& comments,
    const std::unordered_set<std::string>& submission_ids);

}  // namespace pairrank

#endif  // PAIRRANK_INGEST_HPP_
