#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rhcnn/common.hpp"

namespace rhcnn {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kNumId = 2;
inline constexpr std::int32_t kNumSpecialTokens = 3;

inline constexpr const char* kPadToken = "<PAD>";
inline constexpr const char* kUnkToken = "<UNK>";
inline constexpr const char* kNumToken = "<NUM>";

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

inline void tokenize_into(std::string_view text, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      std::size_t lo = i, hi = j;
      while (lo < hi && is_punct(text[lo])) ++lo;
      while (hi > lo && is_punct(text[hi - 1])) --hi;
      if (hi > lo) {
        bool all_digits = true;
        std::string tok;
        tok.reserve(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) {
          const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[k])));
          tok.push_back(c);
          all_digits = all_digits && is_digit(c);
        }
        out.push_back(all_digits ? std::string(kNumToken) : std::move(tok));
      }
    }
    i = j;
  }
}

}  // namespace detail

// Lowercased tokens split on whitespace with leading/trailing punctuation
// stripped. A token consisting entirely of digits becomes <NUM>; stop words
// are kept. Either field may be empty.
inline std::vector<std::string> tokenize(std::string_view title, std::string_view abstract) {
  std::vector<std::string> out;
  detail::tokenize_into(title, out);
  detail::tokenize_into(abstract, out);
  return out;
}

struct Vocabulary {
  std::vector<std::string> id_to_token;  // ids 0..2 are <PAD>, <UNK>, <NUM>
  std::unordered_map<std::string, std::int32_t> token_to_id;

  std::int32_t size() const { return static_cast<std::int32_t>(id_to_token.size()); }

  std::int32_t id_of(std::string_view token) const {
    const auto it = token_to_id.find(std::string(token));
    return it == token_to_id.end() ? kUnkId : it->second;
  }

  bool contains(std::string_view token) const {
    return token_to_id.find(std::string(token)) != token_to_id.end();
  }
};

// Tokens with corpus frequency below min_count are excluded and encode as
// <UNK>. Id order is frequency-descending, ties broken lexicographically, so
// identical corpora always produce identical vocabularies.
inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents,
                                   int min_count = 5) {
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& doc : documents) {
    for (const auto& tok : doc) {
      if (tok == kNumToken) continue;  // specials bypass the frequency rule
      ++counts[tok];
    }
  }

  std::vector<std::pair<std::string, std::int64_t>> kept;
  kept.reserve(counts.size());
  for (auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.id_to_token = {kPadToken, kUnkToken, kNumToken};
  vocab.id_to_token.reserve(kept.size() + kNumSpecialTokens);
  for (auto& [tok, n] : kept) vocab.id_to_token.push_back(tok);
  for (std::int32_t id = 0; id < vocab.size(); ++id) {
    vocab.token_to_id.emplace(vocab.id_to_token[id], id);
  }
  return vocab;
}

// Token-id sequences for every kept document; unpadded, truncated to the
// first max_length tokens. Batching pads and masks downstream.
struct DocumentCorpus {
  Vocabulary vocab;
  std::vector<std::vector<std::int32_t>> sequences;  // indexed by item
  int max_length = 200;

  int n_items() const { return static_cast<int>(sequences.size()); }
};

inline std::vector<std::int32_t> encode_tokens(const std::vector<std::string>& tokens,
                                               const Vocabulary& vocab, int max_length) {
  std::vector<std::int32_t> ids;
  const std::size_t n = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(max_length));
  ids.reserve(n);
  for (std::size_t t = 0; t < n; ++t) ids.push_back(vocab.id_of(tokens[t]));
  return ids;
}

}  // namespace rhcnn
