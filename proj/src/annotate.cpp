#include "pairrank/annotate.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <unistd.h>

#include "httplib.h"
#include "pairrank/error.hpp"
#include "pairrank/rng.hpp"

namespace pairrank {
namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Timestamp now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

nlohmann::json error_body(const std::string& message) {
  return {{"error", message}};
}

}  // namespace

nlohmann::json judgment_to_json(const Judgment& j) {
  nlohmann::ordered_json o;
  o["session_id"] = j.session_id;
  o["pair_id"] = j.pair_id;
  o["choice"] = j.choice == Label::kAWins ? "a" : "b";
  o["rationale"] = j.rationale;
  o["submitted_at"] = j.submitted_at;
  return o;
}

Judgment judgment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("body must be an object");
  Judgment out;
  auto str = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw std::invalid_argument(std::string("missing ") + key);
      return {};
    }
    if (!j[key].is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
    return j[key].get<std::string>();
  };
  out.session_id = str("session_id", true);
  out.pair_id = str("pair_id", true);
  const std::string choice = str("choice", true);
  if (out.session_id.empty()) throw std::invalid_argument("empty session_id");
  if (choice == "a") {
    out.choice = Label::kAWins;
  } else if (choice == "b") {
    out.choice = Label::kBWins;
  } else {
    throw std::invalid_argument("choice must be \"a\" or \"b\"");
  }
  out.rationale = str("rationale", false);
  if (j.contains("submitted_at")) {
    if (!j["submitted_at"].is_number_integer()) {
      throw std::invalid_argument("submitted_at must be an integer");
    }
    out.submitted_at = j["submitted_at"].get<Timestamp>();
  }
  return out;
}

AnnotationStore::AnnotationStore(const Dataset& data,
                                 std::vector<RankedPair> pairs,
                                 const ImageSource* images, AnnotateConfig cfg)
    : data_(data), pairs_(std::move(pairs)), images_(images), cfg_(std::move(cfg)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (!pair_index_.emplace(pairs_[i].pair_id, i).second) {
      throw DataError("duplicate pair id " + pairs_[i].pair_id);
    }
    for (const auto* id : {&pairs_[i].id_a, &pairs_[i].id_b}) {
      data_.at(*id);
      image_ids_.insert(*id);
    }
  }
  {
    std::ifstream in(cfg_.log_path);
    std::string line;
    std::size_t line_no = 0;
    while (in && std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = cfg_.log_path.string() + ":" + std::to_string(line_no);
      Judgment j;
      try {
        j = judgment_from_json(nlohmann::json::parse(line));
      } catch (const std::exception& e) {
        throw DataError(where + ": " + e.what());
      }
      if (!pair_index_.count(j.pair_id)) throw DataError(where + ": unknown pair " + j.pair_id);
      if (!judged_.emplace(j.session_id, j.pair_id).second) {
        throw DataError(where + ": duplicate judgment");
      }
      judgments_.push_back(std::move(j));
    }
  }
  log_.reset(std::fopen(cfg_.log_path.c_str(), "a"));
  if (!log_) throw DataError("cannot open judgment log " + cfg_.log_path.string());
}

std::string AnnotationStore::new_session() {
  std::lock_guard lock(mu_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(
                    mix64(cfg_.seed ^ static_cast<std::uint64_t>(now_seconds()), session_counter_++)));
  return buf;
}

std::vector<std::size_t> AnnotationStore::order_for(const std::string& session) const {
  std::vector<std::size_t> order(pairs_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix64(cfg_.seed, fnv1a(session)));
  rng.shuffle(order);
  return order;
}

nlohmann::json AnnotationStore::next_pair(const std::string& session) const {
  const auto order = order_for(session);
  std::lock_guard lock(mu_);
  std::size_t done = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& p = pairs_[order[k]];
    if (judged_.count({session, p.pair_id})) {
      ++done;
      continue;
    }
    auto item = [&](const std::string& id) {
      const auto& s = data_.at(id);
      return nlohmann::ordered_json{{"id", s.id}, {"title", s.title}, {"image_url", "/img/" + s.id}};
    };
    nlohmann::ordered_json out;
    out["done"] = false;
    out["pair_id"] = p.pair_id;
    out["judged"] = done;
    out["total"] = pairs_.size();
    out["a"] = item(p.id_a);
    out["b"] = item(p.id_b);
    return out;
  }
  return nlohmann::ordered_json{{"done", true}, {"judged", done}, {"total", pairs_.size()}};
}

void AnnotationStore::append_locked(const Judgment& j) {
  const std::string line = judgment_to_json(j).dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), log_.get()) != line.size() ||
      std::fflush(log_.get()) != 0) {
    throw std::runtime_error("judgment log write failed");
  }
  ::fsync(fileno(log_.get()));
}

AnnotationStore::Outcome AnnotationStore::submit(const std::string& body) {
  Judgment j;
  try {
    j = judgment_from_json(nlohmann::json::parse(body));
  } catch (const std::exception& e) {
    return {400, error_body(e.what())};
  }
  if (!pair_index_.count(j.pair_id)) return {409, error_body("unknown pair " + j.pair_id)};
  if (j.submitted_at == 0) j.submitted_at = now_seconds();
  std::lock_guard lock(mu_);
  if (judged_.count({j.session_id, j.pair_id})) {
    return {409, error_body("pair already judged in this session")};
  }
  try {
    append_locked(j);
  } catch (const std::exception& e) {
    return {500, error_body(e.what())};
  }
  judged_.emplace(j.session_id, j.pair_id);
  judgments_.push_back(j);
  return {201, {{"ok", true}}};
}

std::vector<Judgment> AnnotationStore::judgments() const {
  std::lock_guard lock(mu_);
  return judgments_;
}

HumanAccuracy AnnotationStore::accuracy() const {
  const auto js = judgments();
  return human_accuracy(js, pairs_);
}

nlohmann::json AnnotationStore::stats() const {
  const auto acc = accuracy();
  auto row = [](const AccuracyCount& c) {
    return nlohmann::ordered_json{{"n", c.n}, {"correct", c.correct}, {"accuracy", c.accuracy()}};
  };
  nlohmann::ordered_json out;
  out["aggregate"] = row(acc.aggregate);
  out["annotators"] = nlohmann::ordered_json::object();
  for (const auto& [session, c] : acc.per_annotator) out["annotators"][session] = row(c);
  return out;
}

std::optional<std::vector<std::uint8_t>> AnnotationStore::image_png(
    const std::string& id) const {
  if (!images_ || !image_ids_.count(id)) return std::nullopt;
  const auto img = images_->image_for(data_.at(id));
  if (!img) return std::nullopt;
  return encode_png(*img);
}

AnnotationServer::AnnotationServer(AnnotationStore& store)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  auto send = [](httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  srv.Get("/api/session", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"session_id", store_.new_session()}});
  });
  srv.Get("/api/pairs/next", [this, send](const httplib::Request& req, httplib::Response& res) {
    const auto session = req.get_param_value("session");
    if (session.empty()) return send(res, 400, error_body("missing session parameter"));
    send(res, 200, store_.next_pair(session));
  });
  srv.Post("/api/judgments", [this, send](const httplib::Request& req, httplib::Response& res) {
    const auto outcome = store_.submit(req.body);
    send(res, outcome.status, outcome.body);
  });
  srv.Get("/api/stats", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, 200, store_.stats());
  });
  srv.Get(R"(/img/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    const auto png = store_.image_png(req.matches[1]);
    if (!png) return send(res, 404, error_body("image unavailable"));
    res.status = 200;
    res.set_content(reinterpret_cast<const char*>(png->data()), png->size(), "image/png");
  });
  if (store_.config().assets_dir) srv.set_mount_point("/", store_.config().assets_dir->string());
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void AnnotationServer::listen() { server_->listen_after_bind(); }

void AnnotationServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace pairrank
