#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "pairrank/annotate.hpp"
#include "pairrank/dataset.hpp"
#include "pairrank/error.hpp"
#include "pairrank/image.hpp"
#include "pairrank/pairing.hpp"
#include "pairrank/rng.hpp"
#include "pairrank/synth.hpp"
#include "test_util.hpp"

using namespace pairrank;
using nlohmann::json;

namespace {

struct Fixture {
  Market market;
  Dataset data;
  std::vector<RankedPair> pairs;
  std::unique_ptr<SyntheticImageSource> images;

  explicit Fixture(std::size_t n_pairs) {
    auto cfg = market_preset("content");
    cfg.n_submissions = 4000;
    cfg.duration_days = 2;
    cfg.seed = 31;
    market = generate(cfg);
    data = Dataset(market.submissions, market.comments);
    PairConfig pc;
    pc.max_window = 600;
    pairs = sample_pairs(data.submissions(), pc, 1);
    REQUIRE(pairs.size() >= n_pairs);
    pairs.resize(n_pairs);
    images = std::make_unique<SyntheticImageSource>(market);
  }
};

// Server on a free local port, listening on a background thread.
struct RunningServer {
  AnnotationServer server;
  int port = -1;
  std::thread thread;

  explicit RunningServer(AnnotationStore& store) : server(store) {
    port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen(); });
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_connection_timeout(5);
    c.set_read_timeout(10);
    return c;
  }
};

json get_json(httplib::Client& c, const std::string& path, int expected = 200) {
  auto res = c.Get(path);
  REQUIRE(res);
  CHECK(res->status == expected);
  return json::parse(res->body);
}

int post(httplib::Client& c, const json& body) {
  auto res = c.Post("/api/judgments", body.dump(), "application/json");
  REQUIRE(res);
  return res->status;
}

std::string new_session(httplib::Client& c) {
  return get_json(c, "/api/session").at("session_id").get<std::string>();
}

AnnotateConfig config(const std::filesystem::path& dir, std::uint64_t seed = 1) {
  AnnotateConfig cfg;
  cfg.log_path = dir / "judgments.jsonl";
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("annotate") {

TEST_CASE("twenty-pair session round trip") {
  Fixture fx(20);
  const auto dir = test::temp_dir("annotate_rt");
  AnnotationStore store(fx.data, fx.pairs, fx.images.get(), config(dir));
  RunningServer srv(store);
  auto c = srv.client();
  const auto session = new_session(c);

  std::map<std::string, Label> truth;
  for (const auto& p : fx.pairs) truth[p.pair_id] = p.label;
  std::set<std::string> served;
  std::size_t expected_correct = 0;
  for (int i = 0; i < 20; ++i) {
    const auto next = get_json(c, "/api/pairs/next?session=" + session);
    REQUIRE_FALSE(next.at("done").get<bool>());
    const auto text = next.dump();
    CHECK(text.find("label") == std::string::npos);
    CHECK(text.find("score") == std::string::npos);
    const auto pid = next.at("pair_id").get<std::string>();
    CHECK(served.insert(pid).second);
    CHECK(next.at("a").at("image_url").get<std::string>().rfind("/img/", 0) == 0);
    const bool choose_a = i % 3 != 0;
    expected_correct += (choose_a ? Label::kAWins : Label::kBWins) == truth.at(pid);
    CHECK(post(c, {{"session_id", session}, {"pair_id", pid}, {"choice", choose_a ? "a" : "b"},
                   {"rationale", "looks nicer"}}) == 201);
  }
  CHECK(get_json(c, "/api/pairs/next?session=" + session).at("done").get<bool>());
  const auto stats = get_json(c, "/api/stats");
  CHECK(stats.at("aggregate").at("n") == 20);
  CHECK(stats.at("aggregate").at("correct") == expected_correct);
  CHECK(stats.at("aggregate").at("accuracy").get<double>() == doctest::Approx(expected_correct / 20.0));
  CHECK(stats.at("annotators").at(session).at("n") == 20);

  // Images are served for pair members only.
  auto img = c.Get("/img/" + fx.pairs[0].id_a);
  REQUIRE(img);
  CHECK(img->status == 200);
  const auto decoded = decode_normalized_image(std::vector<std::uint8_t>(img->body.begin(), img->body.end()));
  REQUIRE(decoded.image);
  CHECK(*decoded.image == *fx.images->image_for(fx.data.at(fx.pairs[0].id_a)));
  auto missing = c.Get("/img/not-a-member");
  REQUIRE(missing);
  CHECK(missing->status == 404);
}

TEST_CASE("rejections leave the stats unchanged") {
  Fixture fx(20);
  const auto dir = test::temp_dir("annotate_reject");
  AnnotationStore store(fx.data, fx.pairs, fx.images.get(), config(dir));
  RunningServer srv(store);
  auto c = srv.client();
  const auto s = new_session(c);
  const auto pid = fx.pairs[0].pair_id;
  CHECK(post(c, {{"session_id", s}, {"pair_id", pid}, {"choice", "a"}}) == 201);
  const auto before = get_json(c, "/api/stats");
  CHECK(post(c, {{"session_id", s}, {"pair_id", pid}, {"choice", "b"}}) == 409);
  CHECK(post(c, {{"session_id", s}, {"pair_id", "p999999"}, {"choice", "a"}}) == 409);
  CHECK(post(c, {{"session_id", s}, {"pair_id", pid}, {"choice", "c"}}) == 400);
  CHECK(post(c, {{"session_id", s}, {"choice", "a"}}) == 400);
  CHECK(post(c, {{"session_id", 5}, {"pair_id", pid}, {"choice", "a"}}) == 400);
  auto bad = c.Post("/api/judgments", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(get_json(c, "/api/stats") == before);
  get_json(c, "/api/pairs/next", 400);
}

TEST_CASE("per-session order is a seeded shuffle") {
  Fixture fx(20);
  const auto dir = test::temp_dir("annotate_order");
  AnnotationStore store(fx.data, fx.pairs, fx.images.get(), config(dir));
  const auto first = store.next_pair("session-x").at("pair_id");
  CHECK(store.next_pair("session-x").at("pair_id") == first);
  std::set<std::string> firsts;
  for (int i = 0; i < 20; ++i) firsts.insert(store.next_pair("s" + std::to_string(i)).at("pair_id").get<std::string>());
  CHECK(firsts.size() > 5);
}

TEST_CASE("concurrent sessions lose nothing and the log replays exactly") {
  Fixture fx(20);
  const auto dir = test::temp_dir("annotate_concurrent");
  json stats;
  {
    AnnotationStore store(fx.data, fx.pairs, fx.images.get(), config(dir));
    RunningServer srv(store);
    std::vector<std::thread> workers;
    std::atomic<int> accepted{0};
    for (int w = 0; w < 4; ++w) {
      workers.emplace_back([&, w] {
        auto c = srv.client();
        const auto s = new_session(c);
        for (const auto& p : fx.pairs) {
          const auto r = c.Post("/api/judgments",
                                json{{"session_id", s}, {"pair_id", p.pair_id}, {"choice", w % 2 ? "a" : "b"}}.dump(),
                                "application/json");
          if (r && r->status == 201) ++accepted;
        }
      });
    }
    for (auto& t : workers) t.join();
    CHECK(accepted == 80);
    auto c = srv.client();
    stats = get_json(c, "/api/stats");
    CHECK(stats.at("aggregate").at("n") == 80);
    CHECK(stats.at("annotators").size() == 4);
  }
  std::ifstream log(dir / "judgments.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  CHECK(lines == 80);

  AnnotationStore replayed(fx.data, fx.pairs, fx.images.get(), config(dir));
  CHECK(replayed.stats() == stats);
  CHECK(replayed.judgments().size() == 80);
}

TEST_CASE("coin-flip annotators score near one half") {
  Fixture fx(20);
  const auto dir = test::temp_dir("annotate_coin");
  AnnotationStore store(fx.data, fx.pairs, fx.images.get(), config(dir));
  RunningServer srv(store);
  auto c = srv.client();
  Rng coin(5);
  for (int session = 0; session < 50; ++session) {
    const auto s = new_session(c);
    for (;;) {
      const auto next = get_json(c, "/api/pairs/next?session=" + s);
      if (next.at("done").get<bool>()) break;
      REQUIRE(post(c, {{"session_id", s}, {"pair_id", next.at("pair_id")}, {"choice", coin.coin() ? "a" : "b"}}) ==
              201);
    }
  }
  const auto agg = get_json(c, "/api/stats").at("aggregate");
  CHECK(agg.at("n") == 1000);
  const double acc = agg.at("accuracy").get<double>();
  CHECK(acc >= 0.45);
  CHECK(acc <= 0.55);
}

TEST_CASE("corrupt logs are rejected on start") {
  Fixture fx(5);
  const auto dir = test::temp_dir("annotate_corrupt");
  test::spit(dir / "judgments.jsonl", "{\"session_id\":\"s\",\"pair_id\":\"nope\",\"choice\":\"a\"}\n");
  CHECK_THROWS_AS(AnnotationStore(fx.data, fx.pairs, fx.images.get(), config(dir)), DataError);
  test::spit(dir / "judgments.jsonl", "garbage\n");
  CHECK_THROWS_AS(AnnotationStore(fx.data, fx.pairs, fx.images.get(), config(dir)), DataError);
}

TEST_CASE("static assets are served when configured") {
  Fixture fx(5);
  const auto dir = test::temp_dir("annotate_assets");
  std::filesystem::create_directories(dir / "ui");
  test::spit(dir / "ui" / "index.html", "<html>annotate</html>");
  auto cfg = config(dir);
  cfg.assets_dir = dir / "ui";
  AnnotationStore store(fx.data, fx.pairs, fx.images.get(), cfg);
  RunningServer srv(store);
  auto c = srv.client();
  auto res = c.Get("/index.html");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "<html>annotate</html>");
}

}  // TEST_SUITE
