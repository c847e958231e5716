#include "pairrank/text_features.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace pairrank {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_word_byte(unsigned char c) {
  return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    std::size_t lo = i;
    std::size_t hi = j;
    while (lo < hi && !is_word_byte(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && !is_word_byte(static_cast<unsigned char>(text[hi - 1]))) {
      --hi;
    }
    if (lo < hi) {
      std::string tok(text.substr(lo, hi - lo));
      for (auto& c : tok) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
      tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return tokens;
}

std::array<double, kStructuralDim> structural_features(std::string_view title) {
  const auto tokens = tokenize(title);
  std::size_t chars = 0;
  std::size_t punct = 0;
  for (unsigned char c : title) {
    if ((c & 0xC0) == 0x80) continue;  // UTF-8 continuation byte
    ++chars;
    if (c < 0x80 && !is_space(c) && !is_word_byte(c)) ++punct;
  }
  const std::unordered_set<std::string> types(tokens.begin(), tokens.end());
  const double n_tok = static_cast<double>(tokens.size());
  return {n_tok, static_cast<double>(chars),
          tokens.empty() ? 0.0 : static_cast<double>(types.size()) / n_tok,
          chars == 0 ? 0.0
                     : static_cast<double>(punct) / static_cast<double>(chars)};
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, int min_df)
    : tokens_(std::move(tokens)), min_df_(min_df) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + tokens_[i] +
                                  "'");
    }
  }
}

int Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

Vocabulary build_vocab_tokens(
    std::span<const std::vector<std::string>> documents, int min_df) {
  std::unordered_map<std::string, int> df;
  for (const auto& doc : documents) {
    const std::set<std::string> distinct(doc.begin(), doc.end());
    for (const auto& t : distinct) ++df[t];
  }
  std::vector<std::pair<int, std::string>> kept;
  for (auto& [tok, n] : df) {
    if (n >= min_df) kept.emplace_back(n, tok);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [n, tok] : kept) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens), min_df);
}

Vocabulary build_vocab(std::span<const std::string> titles, int min_df) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(titles.size());
  for (const auto& t : titles) docs.push_back(tokenize(t));
  return build_vocab_tokens(docs, min_df);
}

SparseVector unigram_features_tokens(const std::vector<std::string>& tokens,
                                     const Vocabulary& vocab) {
  std::vector<std::uint32_t> hits;
  for (const auto& t : tokens) {
    const int i = vocab.index_of(t);
    if (i >= 0) hits.push_back(static_cast<std::uint32_t>(i));
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  SparseVector v;
  for (auto i : hits) v.push(i, 1.0);
  return v;
}

SparseVector unigram_features(std::string_view title, const Vocabulary& vocab) {
  return unigram_features_tokens(tokenize(title), vocab);
}

}  // namespace pairrank
