#ifndef PAIRRANK_PHASH_HPP_
#define PAIRRANK_PHASH_HPP_

#include <bit>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairrank/image.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

struct PerceptualHash {
  std::uint64_t bits = 0;

  bool operator==(const PerceptualHash&) const = default;
};

inline int hamming(PerceptualHash a, PerceptualHash b) {
  return std::popcount(a.bits ^ b.bits);
}

// DCT hash: 32x32 box-downscaled luma, 2-D orthonormal DCT-II, the 63 AC
// terms of the top-left 8x8 block plus coefficient (0, 8), each compared
// against the median of those 64 values.
PerceptualHash phash64(const NormalizedImage& img);

std::string to_hex(PerceptualHash h);
PerceptualHash hash_from_hex(const std::string& hex);

// Removes every member of every duplicate group. Two submissions are
// duplicates when they share a link_key or their hashes are within
// `hamming_threshold` bits; groups are the transitive closure of that
// relation. Throws DataError if an image-bearing submission has no hash.
std::vector<Submission> dedup(
    const std::vector<Submission>& subs,
    const std::unordered_map<std::string, PerceptualHash>& hashes,
    int hamming_threshold = 5);

// The duplicate groups themselves (size >= 2), as indices into `subs`,
// each sorted ascending; groups ordered by their first index.
std::vector<std::vector<std::size_t>> duplicate_groups(
    const std::vector<Submission>& subs,
    const std::unordered_map<std::string, PerceptualHash>& hashes,
    int hamming_threshold = 5);

}  // namespace pairrank

#endif  // PAIRRANK_PHASH_HPP_
