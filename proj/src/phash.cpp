#include "pairrank/phash.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "pairrank/error.hpp"

namespace pairrank {
namespace {

constexpr int kSmall = 32;
constexpr int kBlock = NormalizedImage::kSize / kSmall;

const std::array<double, kSmall * kSmall>& dct_matrix() {
  static const auto m = [] {
    std::array<double, kSmall * kSmall> c{};
    for (int u = 0; u < kSmall; ++u) {
      const double scale =
          u == 0 ? std::sqrt(1.0 / kSmall) : std::sqrt(2.0 / kSmall);
      for (int x = 0; x < kSmall; ++x) {
        c[u * kSmall + x] =
            scale * std::cos(M_PI * (2 * x + 1) * u / (2.0 * kSmall));
      }
    }
    return c;
  }();
  return m;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

PerceptualHash phash64(const NormalizedImage& img) {
  const auto gray = grayscale(img);
  std::array<double, kSmall * kSmall> small{};
  for (int r = 0; r < NormalizedImage::kSize; ++r) {
    for (int c = 0; c < NormalizedImage::kSize; ++c) {
      small[(r / kBlock) * kSmall + c / kBlock] +=
          gray[static_cast<std::size_t>(r) * NormalizedImage::kSize + c];
    }
  }
  for (auto& v : small) v /= kBlock * kBlock;

  const auto& dct = dct_matrix();
  // tmp = C * X, coeffs = tmp * C^T; only rows 0..7 and columns 0..8 are
  // needed.
  constexpr int kRows = 8;
  constexpr int kCols = 9;
  std::array<double, kRows * kSmall> tmp{};
  for (int u = 0; u < kRows; ++u) {
    for (int x = 0; x < kSmall; ++x) {
      double acc = 0.0;
      for (int y = 0; y < kSmall; ++y) {
        acc += dct[u * kSmall + y] * small[y * kSmall + x];
      }
      tmp[u * kSmall + x] = acc;
    }
  }
  std::array<double, 64> kept{};
  std::size_t n = 0;
  for (int u = 0; u < kRows; ++u) {
    for (int v = 0; v < kCols; ++v) {
      if (u == 0 && v == 0) continue;
      if (v == 8 && u != 0) continue;
      double acc = 0.0;
      for (int x = 0; x < kSmall; ++x) {
        acc += tmp[u * kSmall + x] * dct[v * kSmall + x];
      }
      // Rounding residue of analytically zero terms must not flip bits.
      if (std::abs(acc) < 1e-9) acc = 0.0;
      kept[n++] = acc;
    }
  }
  auto sorted = kept;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[31] + sorted[32]);
  PerceptualHash h;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i] > median) h.bits |= std::uint64_t{1} << i;
  }
  return h;
}

std::string to_hex(PerceptualHash h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h.bits));
  return buf;
}

PerceptualHash hash_from_hex(const std::string& hex) {
  if (hex.empty() || hex.size() > 16 ||
      hex.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
    throw DataError("bad perceptual hash '" + hex + "'");
  }
  return {std::stoull(hex, nullptr, 16)};
}

std::vector<std::vector<std::size_t>> duplicate_groups(
    const std::vector<Submission>& subs,
    const std::unordered_map<std::string, PerceptualHash>& hashes,
    int hamming_threshold) {
  DisjointSets sets(subs.size());

  std::unordered_map<std::string, std::size_t> first_link;
  std::vector<std::pair<PerceptualHash, std::size_t>> hashed;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& s = subs[i];
    if (s.link_key) {
      auto [it, inserted] = first_link.emplace(*s.link_key, i);
      if (!inserted) sets.unite(it->second, i);
    }
    auto h = hashes.find(s.id);
    if (h == hashes.end()) {
      if (s.image_ref) {
        throw DataError("no perceptual hash for image submission '" + s.id +
                        "'");
      }
      continue;
    }
    hashed.emplace_back(h->second, i);
  }

  // Exact matches first, then pigeonhole multi-index search over the
  // distinct hashes: within distance t, at least one of t+1 disjoint bit
  // chunks agrees exactly.
  std::map<std::uint64_t, std::size_t> distinct;
  for (const auto& [h, i] : hashed) {
    auto [it, inserted] = distinct.emplace(h.bits, i);
    if (!inserted) sets.unite(it->second, i);
  }
  if (hamming_threshold > 0 && distinct.size() > 1) {
    const int chunks = std::min(hamming_threshold + 1, 64);
    std::vector<std::pair<std::uint64_t, std::size_t>> items(distinct.begin(),
                                                             distinct.end());
    for (int c = 0; c < chunks; ++c) {
      const int lo = c * 64 / chunks;
      const int hi = (c + 1) * 64 / chunks;
      const std::uint64_t mask =
          (hi - lo == 64 ? ~std::uint64_t{0}
                         : ((std::uint64_t{1} << (hi - lo)) - 1))
          << lo;
      std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
      for (std::size_t k = 0; k < items.size(); ++k) {
        buckets[items[k].first & mask].push_back(k);
      }
      for (const auto& [key, members] : buckets) {
        for (std::size_t x = 0; x < members.size(); ++x) {
          for (std::size_t y = x + 1; y < members.size(); ++y) {
            const auto& a = items[members[x]];
            const auto& b = items[members[y]];
            if (std::popcount(a.first ^ b.first) <= hamming_threshold) {
              sets.unite(a.second, b.second);
            }
          }
        }
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    by_root[sets.find(i)].push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [root, members] : by_root) {
    if (members.size() > 1) groups.push_back(std::move(members));
  }
  return groups;
}

std::vector<Submission> dedup(
    const std::vector<Submission>& subs,
    const std::unordered_map<std::string, PerceptualHash>& hashes,
    int hamming_threshold) {
  std::vector<bool> drop(subs.size(), false);
  for (const auto& g : duplicate_groups(subs, hashes, hamming_threshold)) {
    for (auto i : g) drop[i] = true;
  }
  std::vector<Submission> out;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!drop[i]) out.push_back(subs[i]);
  }
  return out;
}

}  // namespace pairrank
