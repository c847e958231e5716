#include <algorithm>
#include <map>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "doctest.h"
#include "pairrank/error.hpp"
#include "pairrank/image.hpp"
#include "pairrank/ingest.hpp"
#include "pairrank/rng.hpp"
#include "test_util.hpp"

using namespace pairrank;

TEST_SUITE("ingest") {

TEST_CASE("parse a single submission line") {
  std::istringstream in(
      R"({"id":"a1","author":"u1","subreddit":"aww","created_utc":100,"score":21,"title":"hi"})");
  const auto r = parse_submissions(in);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].id == "a1");
  CHECK(r.records[0].author == "u1");
  CHECK(r.records[0].community == "aww");
  CHECK(r.records[0].created_utc == 100);
  CHECK(r.records[0].score == 21);
  CHECK(r.records[0].title == "hi");
  CHECK_FALSE(r.records[0].image_ref);
  CHECK(r.skipped == 0);
}

TEST_CASE("malformed lines are skipped under the cap and fatal above it") {
  std::string good;
  for (int i = 0; i < 200; ++i) {
    good += R"({"id":"s)" + std::to_string(i) +
            R"(","author":"u","subreddit":"c","created_utc":)" + std::to_string(100 + i) +
            R"(,"score":1,"title":"t"})" "\n";
  }
  {
    std::istringstream in(good + "not json\n\n");
    const auto r = parse_submissions(in);
    CHECK(r.records.size() == 200);
    CHECK(r.skipped == 1);
    CHECK_FALSE(r.diagnostics.empty());
  }
  {
    std::istringstream in(good + "x\ny\nz\n");
    CHECK_THROWS_AS(parse_submissions(in), DataError);
  }
  {
    std::istringstream in(good + "x\ny\nz\n");
    ParseOptions lax;
    lax.max_error_rate = 0.05;
    CHECK(parse_submissions(in, lax).skipped == 3);
  }
}

TEST_CASE("missing fields and non-positive times are malformed") {
  std::istringstream in(
      R"({"id":"a","author":"u","subreddit":"c","created_utc":0,"score":1,"title":"t"})" "\n"
      R"({"author":"u","subreddit":"c","created_utc":5,"score":1,"title":"t"})" "\n");
  ParseOptions lax;
  lax.max_error_rate = 1.0;
  const auto r = parse_submissions(in, lax);
  CHECK(r.records.empty());
  CHECK(r.skipped == 2);
}

TEST_CASE("duplicate ids are skipped") {
  std::istringstream in(
      R"({"id":"a","author":"u","subreddit":"c","created_utc":5,"score":1,"title":"t"})" "\n"
      R"({"id":"a","author":"v","subreddit":"c","created_utc":6,"score":2,"title":"t"})" "\n");
  ParseOptions lax;
  lax.max_error_rate = 1.0;
  const auto r = parse_submissions(in, lax);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].author == "u");
  CHECK(r.skipped == 1);
}

TEST_CASE("submission round trip through the line format") {
  Rng rng(3);
  std::vector<Submission> subs;
  for (int i = 0; i < 50; ++i) {
    Submission s = test::sub("id" + std::to_string(i), 1000 + rng.index(100000),
                             static_cast<std::int64_t>(rng.index(500)) - 10,
                             i % 7 == 0 ? std::string(kDeletedAuthor) : "user" + std::to_string(i),
                             "title \"quoted\" caf\xc3\xa9 " + std::to_string(i));
    if (i % 3 == 0) s.image_ref = "img/" + std::to_string(i) + ".png";
    if (i % 4 == 0) s.link_key = "k" + std::to_string(i);
    subs.push_back(s);
  }
  std::ostringstream out;
  for (const auto& s : subs) write_submission(out, s);
  std::istringstream in(out.str());
  CHECK(parse_submissions(in).records == subs);
}

TEST_CASE("comment round trip") {
  std::vector<Comment> cs;
  for (int i = 0; i < 10; ++i) {
    Comment c;
    c.id = "c" + std::to_string(i);
    c.author = "u" + std::to_string(i % 3);
    c.link_id = "t3_s1";
    c.parent_id = i == 0 ? "t3_s1" : "t1_c" + std::to_string(i - 1);
    c.created_utc = 100 + i;
    c.score = i - 3;
    c.body = "body " + std::to_string(i);
    cs.push_back(c);
  }
  std::ostringstream out;
  for (const auto& c : cs) write_comment(out, c);
  std::istringstream in(out.str());
  CHECK(parse_comments(in).records == cs);
}

std::vector<Submission> day_fixture(const std::vector<int>& counts) {
  std::vector<Submission> subs;
  int k = 0;
  for (std::size_t d = 0; d < counts.size(); ++d) {
    for (int i = 0; i < counts[d]; ++i) {
      subs.push_back(test::sub("s" + std::to_string(k++),
                               static_cast<Timestamp>(d + 1) * kSecondsPerDay + 60 * i, 5));
    }
  }
  return subs;
}

TEST_CASE("active-day filter boundary") {
  CHECK(filter_active_days(day_fixture({16}), 15).size() == 16);
  CHECK(filter_active_days(day_fixture({15}), 15).empty());
  const auto kept = filter_active_days(day_fixture({10, 20, 16}), 15);
  CHECK(kept.size() == 36);
  CHECK(filter_active_days({}, 15).empty());
}

TEST_CASE("active-day filter matches a day histogram and is idempotent") {
  Rng rng(11);
  std::vector<Submission> subs;
  for (int i = 0; i < 2000; ++i) {
    subs.push_back(test::sub("s" + std::to_string(i),
                             kSecondsPerDay + static_cast<Timestamp>(rng.index(60 * kSecondsPerDay)),
                             1));
  }
  std::map<std::int64_t, int> hist;
  for (const auto& s : subs) ++hist[utc_day(s.created_utc)];
  std::vector<Submission> expected;
  for (const auto& s : subs) {
    if (hist[utc_day(s.created_utc)] > 40) expected.push_back(s);
  }
  const auto once = filter_active_days(subs, 40);
  CHECK(once == expected);
  CHECK(filter_active_days(once, 40) == once);
}

TEST_CASE("per-community filtering keeps communities apart") {
  auto a = day_fixture({16});
  auto b = day_fixture({10});
  for (auto& s : b) {
    s.community = "other";
    s.id += "b";
  }
  std::vector<Submission> all = a;
  all.insert(all.end(), b.begin(), b.end());
  CHECK(filter_active_days_by_community(all, 15).size() == 16);
}

TEST_CASE("orphan comments are reported") {
  Comment c1;
  c1.id = "c1";
  c1.link_id = "t3_s1";
  Comment c2;
  c2.id = "c2";
  c2.link_id = "s9";
  const auto orphans = find_orphan_comments({c1, c2}, {"s1"});
  CHECK(orphans == std::vector<std::string>{"c2"});
}

TEST_CASE("image loading normalizes size and rejects bad files") {
  const auto dir = test::temp_dir("ingest_images");
  NormalizedImage img;
  for (int r = 0; r < 256; ++r) {
    for (int c = 0; c < 256; ++c) img.set(r, c, r, c, 255 - r);
  }
  write_png(dir / "a.png", img);
  const auto loaded = load_normalized_image(dir / "a.png");
  REQUIRE(loaded.image);
  CHECK(*loaded.image == img);

  test::spit(dir / "broken.png", "not an image");
  const auto bad = load_normalized_image(dir / "broken.png");
  CHECK_FALSE(bad.image);
  CHECK_FALSE(bad.reason.empty());
  CHECK_FALSE(load_normalized_image(dir / "missing.png").image);
}

TEST_CASE("non-square images are resampled and multi-frame files rejected") {
  const auto dir = test::temp_dir("ingest_frames");
  cv::Mat wide(100, 300, CV_8UC3, cv::Scalar(10, 20, 30));
  cv::imwrite((dir / "wide.jpg").string(), wide);
  const auto w = load_normalized_image(dir / "wide.jpg");
  REQUIRE(w.image);
  CHECK(w.image->pixels().size() == NormalizedImage::kBytes);

  std::vector<cv::Mat> frames{cv::Mat(64, 64, CV_8UC3, cv::Scalar(0, 0, 255)),
                              cv::Mat(64, 64, CV_8UC3, cv::Scalar(0, 255, 0))};
  REQUIRE(cv::imwritemulti((dir / "anim.tiff").string(), frames));
  const auto m = load_normalized_image(dir / "anim.tiff");
  CHECK_FALSE(m.image);
  CHECK(m.reason == "multi-frame image");
}

}  // TEST_SUITE
