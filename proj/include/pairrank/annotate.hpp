#ifndef PAIRRANK_ANNOTATE_HPP_
#define PAIRRANK_ANNOTATE_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pairrank/analysis.hpp"
#include "pairrank/dataset.hpp"
#include "pairrank/types.hpp"

namespace httplib {
class Server;
}

namespace pairrank {

struct AnnotateConfig {
  std::filesystem::path log_path = "judgments.jsonl";
  std::optional<std::filesystem::path> assets_dir;  // static UI files
  std::uint64_t seed = 0;
};

// State behind the annotation endpoints. Judgments are appended to a
// JSON-lines log (flushed before acknowledgment) and replayed on start.
class AnnotationStore {
 public:
  // Throws DataError when the existing log is malformed or references
  // unknown pairs.
  AnnotationStore(const Dataset& data, std::vector<RankedPair> pairs,
                  const ImageSource* images, AnnotateConfig cfg);

  std::string new_session();
  // Next unjudged pair for the session in its shuffled order; empty
  // object with "done": true when every pair is judged.
  nlohmann::json next_pair(const std::string& session) const;

  struct Outcome {
    int status = 200;
    nlohmann::json body;
  };
  // Validates and records one judgment body.
  Outcome submit(const std::string& body);

  nlohmann::json stats() const;
  HumanAccuracy accuracy() const;
  std::vector<Judgment> judgments() const;

  // PNG bytes of the normalized image, empty on failure.
  std::optional<std::vector<std::uint8_t>> image_png(const std::string& id) const;

  const AnnotateConfig& config() const { return cfg_; }

 private:
  std::vector<std::size_t> order_for(const std::string& session) const;
  void append_locked(const Judgment& j);

  const Dataset& data_;
  const std::vector<RankedPair> pairs_;
  const ImageSource* images_;
  AnnotateConfig cfg_;
  std::unordered_map<std::string, std::size_t> pair_index_;
  std::set<std::string> image_ids_;

  mutable std::mutex mu_;
  std::uint64_t session_counter_ = 0;
  std::vector<Judgment> judgments_;
  std::set<std::pair<std::string, std::string>> judged_;
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> log_{nullptr, &std::fclose};
};

nlohmann::json judgment_to_json(const Judgment& j);
// Throws std::invalid_argument describing the first problem.
Judgment judgment_from_json(const nlohmann::json& j);

// HTTP front end: GET /api/session, GET /api/pairs/next?session=S,
// POST /api/judgments, GET /api/stats, GET /img/{id}, plus static assets.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationStore& store);
  ~AnnotationServer();

  // Binds host:port (port 0 picks a free port) and returns the port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  AnnotationStore& store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace pairrank

#endif  // PAIRRANK_ANNOTATE_HPP_
