#ifndef PAIRRANK_TEXT_FEATURES_HPP_
#define PAIRRANK_TEXT_FEATURES_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pairrank/sparse.hpp"

namespace pairrank {

// Lowercases ASCII, splits on whitespace and trims non-alphanumeric
// characters from both ends of each token. Bytes of multi-byte UTF-8
// sequences count as alphanumeric.
std::vector<std::string> tokenize(std::string_view text);

inline constexpr std::size_t kStructuralDim = 4;

// [token count, character count (code points), type/token ratio,
//  punctuation characters / character count]; ratios are 0 on a zero
// denominator.
std::array<double, kStructuralDim> structural_features(std::string_view title);

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, int min_df);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int min_df() const { return min_df_; }
  // -1 when absent.
  int index_of(const std::string& token) const;

  bool operator==(const Vocabulary& o) const {
    return tokens_ == o.tokens_ && min_df_ == o.min_df_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int min_df_ = 0;
};

// Tokens present in at least min_df distinct titles, ordered by descending
// document frequency then lexicographically.
Vocabulary build_vocab(std::span<const std::string> titles, int min_df = 5);
// Same, over pre-tokenized documents.
Vocabulary build_vocab_tokens(
    std::span<const std::vector<std::string>> documents, int min_df = 5);

// Binary presence indicators in vocabulary index space.
SparseVector unigram_features(std::string_view title, const Vocabulary& vocab);
SparseVector unigram_features_tokens(const std::vector<std::string>& tokens,
                                     const Vocabulary& vocab);

}  // namespace pairrank

#endif  // PAIRRANK_TEXT_FEATURES_HPP_
