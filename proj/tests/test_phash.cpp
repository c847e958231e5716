#include <algorithm>
#include <map>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "pairrank/error.hpp"
#include "pairrank/image.hpp"
#include "pairrank/phash.hpp"
#include "pairrank/rng.hpp"
#include "test_util.hpp"

using namespace pairrank;

namespace {

// Random scene: soft blobs and hard-edged rectangles over a gradient.
NormalizedImage scene(std::uint64_t seed) {
  Rng rng(seed);
  struct Blob {
    double x, y, r, c[3];
  };
  std::vector<Blob> blobs(4);
  for (auto& b : blobs) {
    b = {rng.uniform(0, 256), rng.uniform(0, 256), rng.uniform(20, 80),
         {rng.uniform(0, 200), rng.uniform(0, 200), rng.uniform(0, 200)}};
  }
  struct Rect {
    int r0, c0, r1, c1;
    double c[3];
  };
  std::vector<Rect> rects(3);
  for (auto& q : rects) {
    const int r0 = static_cast<int>(rng.index(200)), c0 = static_cast<int>(rng.index(200));
    q = {r0, c0, r0 + 20 + static_cast<int>(rng.index(100)), c0 + 20 + static_cast<int>(rng.index(100)),
         {rng.uniform(0, 220), rng.uniform(0, 220), rng.uniform(0, 220)}};
  }
  const double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);
  NormalizedImage img;
  for (int r = 0; r < 256; ++r) {
    for (int c = 0; c < 256; ++c) {
      double px[3];
      for (int k = 0; k < 3; ++k) px[k] = 100 + gx * c + gy * r;
      for (const auto& b : blobs) {
        const double d2 = (c - b.x) * (c - b.x) + (r - b.y) * (r - b.y);
        const double w = std::exp(-d2 / (2 * b.r * b.r));
        for (int k = 0; k < 3; ++k) px[k] = (1 - w) * px[k] + w * b.c[k];
      }
      for (const auto& q : rects) {
        if (r >= q.r0 && r < q.r1 && c >= q.c0 && c < q.c1) {
          for (int k = 0; k < 3; ++k) px[k] = q.c[k];
        }
      }
      img.set(r, c, static_cast<std::uint8_t>(std::clamp(px[0], 0.0, 230.0)),
              static_cast<std::uint8_t>(std::clamp(px[1], 0.0, 230.0)),
              static_cast<std::uint8_t>(std::clamp(px[2], 0.0, 230.0)));
    }
  }
  return img;
}

NormalizedImage brighten(const NormalizedImage& img, double factor) {
  auto px = img.pixels();
  for (auto& v : px) v = static_cast<std::uint8_t>(std::min(255.0, std::round(v * factor)));
  return NormalizedImage(px);
}

// Reference grouping: all-pairs relation closed by repeated relaxation.
std::vector<int> brute_force_groups(const std::vector<Submission>& subs,
                                    const std::unordered_map<std::string, PerceptualHash>& h,
                                    int t) {
  const std::size_t n = subs.size();
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        bool related = subs[i].link_key && subs[j].link_key && *subs[i].link_key == *subs[j].link_key;
        const auto hi = h.find(subs[i].id), hj = h.find(subs[j].id);
        if (hi != h.end() && hj != h.end() && hamming(hi->second, hj->second) <= t) related = true;
        if (related && label[j] > label[i]) {
          label[j] = label[i];
          changed = true;
        }
      }
    }
  }
  return label;
}

}  // namespace

TEST_SUITE("phash") {

TEST_CASE("identical images hash identically") {
  const auto img = scene(1);
  CHECK(phash64(img) == phash64(img));
  CHECK(hamming(phash64(img), phash64(scene(1))) == 0);
}

TEST_CASE("constant images collide") {
  const auto a = phash64(NormalizedImage::filled(0, 0, 0));
  const auto b = phash64(NormalizedImage::filled(200, 10, 90));
  CHECK(a == b);
}

TEST_CASE("brightness change of five percent stays within the threshold") {
  int within = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto img = scene(100 + s);
    const int d = hamming(phash64(img), phash64(brighten(img, 1.05)));
    if (d <= 5) ++within;
  }
  CHECK(within == 20);
}

TEST_CASE("different scenes are far apart") {
  int far = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    if (hamming(phash64(scene(200 + s)), phash64(scene(300 + s))) > 5) ++far;
  }
  CHECK(far >= 9);
}

TEST_CASE("hash is stable under a lossless re-encoding") {
  const auto dir = test::temp_dir("phash_png");
  const auto img = scene(7);
  write_png(dir / "x.png", img);
  const auto back = load_normalized_image(dir / "x.png");
  REQUIRE(back.image);
  CHECK(phash64(*back.image) == phash64(img));
}

TEST_CASE("hex round trip") {
  const PerceptualHash h{0x0123456789abcdefULL};
  CHECK(to_hex(h) == "0123456789abcdef");
  CHECK(hash_from_hex(to_hex(h)) == h);
}

TEST_CASE("dedup examples") {
  auto a = test::sub("a", 1, 5);
  auto b = test::sub("b", 2, 5);
  a.link_key = "imgur1";
  b.link_key = "imgur1";
  CHECK(dedup({a, b}, {}).empty());

  auto x = test::sub("x", 1, 5), y = test::sub("y", 2, 5), z = test::sub("z", 3, 5);
  for (auto* s : {&x, &y, &z}) s->image_ref = s->id + ".png";
  std::unordered_map<std::string, PerceptualHash> far{
      {"x", {0}}, {"y", {0xFFULL}}, {"z", {0xFF00ULL}}};
  CHECK(dedup({x, y, z}, far).size() == 3);

  std::unordered_map<std::string, PerceptualHash> chain{
      {"x", {0}}, {"y", {0}}, {"z", {0b111}}};
  CHECK(dedup({x, y, z}, chain).empty());

  std::unordered_map<std::string, PerceptualHash> missing{{"x", {0}}};
  CHECK_THROWS_AS(dedup({x, y}, missing), DataError);
}

TEST_CASE("dedup agrees with a brute-force closure") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Submission> subs;
    std::unordered_map<std::string, PerceptualHash> hashes;
    std::vector<std::uint64_t> centers(8);
    for (auto& c : centers) c = rng.next();
    for (int i = 0; i < 150; ++i) {
      auto s = test::sub("s" + std::to_string(i), i + 1, 3);
      if (rng.uniform() < 0.8) {
        s.image_ref = s.id + ".png";
        std::uint64_t bits = rng.uniform() < 0.3 ? centers[rng.index(centers.size())] : rng.next();
        const int flips = static_cast<int>(rng.index(5));
        for (int f = 0; f < flips; ++f) bits ^= 1ULL << rng.index(64);
        hashes[s.id] = {bits};
      }
      if (rng.uniform() < 0.1) s.link_key = "k" + std::to_string(rng.index(10));
      subs.push_back(s);
    }
    const auto label = brute_force_groups(subs, hashes, 5);
    std::map<int, int> sizes;
    for (int l : label) ++sizes[l];
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (sizes[label[i]] == 1) expected.push_back(subs[i].id);
    }
    std::vector<std::string> got;
    const auto kept = dedup(subs, hashes, 5);
    for (const auto& s : kept) got.push_back(s.id);
    CHECK(got == expected);

    // No surviving pair is still related.
    bool clean = true;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      for (std::size_t j = i + 1; j < kept.size(); ++j) {
        if (kept[i].link_key && kept[j].link_key && *kept[i].link_key == *kept[j].link_key) clean = false;
        const auto hi = hashes.find(kept[i].id), hj = hashes.find(kept[j].id);
        if (hi != hashes.end() && hj != hashes.end() && hamming(hi->second, hj->second) <= 5) clean = false;
      }
    }
    CHECK(clean);
    const auto groups = duplicate_groups(subs, hashes, 5);
    std::size_t in_groups = 0;
    for (const auto& g : groups) in_groups += g.size();
    CHECK(in_groups + kept.size() == subs.size());
  }
}

}  // TEST_SUITE
