#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "rhcnn/common.hpp"
#include "rhcnn/stopwords.hpp"
#include "rhcnn/text.hpp"

namespace rhcnn {

// Sparse binary item x tag matrix. Every item carries at least one tag after
// backfill; backfilled marks rows whose tags were generated from text.
struct TagMatrix {
  int n_items = 0;
  int n_tags = 0;
  std::vector<std::vector<int>> positives;  // per item, sorted ascending
  std::vector<std::string> tag_vocab;       // index -> tag string
  std::vector<bool> backfilled;

  int index_of(const std::string& tag) const {
    for (int l = 0; l < n_tags; ++l) {
      if (tag_vocab[l] == tag) return l;
    }
    return -1;
  }

  bool has(int item, int tag) const {
    const auto& p = positives[item];
    return std::binary_search(p.begin(), p.end(), tag);
  }
};

// Items with at least one human tag keep them untouched; untagged items
// receive their top-k document tokens by tf-idf (tf = raw in-document count,
// idf = ln(N/df)), skipping special tokens and stop words. Ties break on the
// lexicographically smaller token. New tag strings extend the vocabulary.
inline TagMatrix backfill_tags(const std::vector<std::vector<int>>& human_tags,
                               const std::vector<std::string>& human_tag_vocab,
                               const DocumentCorpus& corpus, int k = 5) {
  const int n_items = corpus.n_items();
  require(static_cast<int>(human_tags.size()) == n_items,
          "backfill_tags: tag rows (", human_tags.size(), ") != corpus items (", n_items, ")");

  TagMatrix tags;
  tags.n_items = n_items;
  tags.tag_vocab = human_tag_vocab;
  tags.positives.assign(n_items, {});
  tags.backfilled.assign(n_items, false);

  std::unordered_map<std::string, int> tag_index;
  for (int l = 0; l < static_cast<int>(tags.tag_vocab.size()); ++l) {
    tag_index.emplace(tags.tag_vocab[l], l);
  }

  // Document frequencies over the stored (truncated) sequences.
  std::vector<int> df(corpus.vocab.size(), 0);
  std::vector<bool> seen(corpus.vocab.size(), false);
  for (const auto& seq : corpus.sequences) {
    for (std::int32_t id : seq) {
      if (!seen[id]) {
        seen[id] = true;
        ++df[id];
      }
    }
    for (std::int32_t id : seq) seen[id] = false;
  }
  const double n_docs = static_cast<double>(n_items);
  const auto& stop = english_stopwords();

  std::vector<int> no_eligible_tokens;
  for (int j = 0; j < n_items; ++j) {
    if (!human_tags[j].empty()) {
      tags.positives[j] = human_tags[j];
      continue;
    }
    // tf over this document, eligible tokens only.
    std::map<std::int32_t, int> tf;
    for (std::int32_t id : corpus.sequences[j]) {
      if (id < kNumSpecialTokens) continue;
      if (stop.count(corpus.vocab.id_to_token[id]) > 0) continue;
      ++tf[id];
    }
    if (tf.empty()) {
      no_eligible_tokens.push_back(j);
      continue;
    }
    std::vector<std::pair<double, std::int32_t>> scored;
    scored.reserve(tf.size());
    for (const auto& [id, count] : tf) {
      const double idf = std::log(n_docs / static_cast<double>(df[id]));
      scored.emplace_back(static_cast<double>(count) * idf, id);
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return corpus.vocab.id_to_token[a.second] < corpus.vocab.id_to_token[b.second];
    });
    const int take = std::min<int>(k, static_cast<int>(scored.size()));
    for (int r = 0; r < take; ++r) {
      const std::string& tok = corpus.vocab.id_to_token[scored[r].second];
      auto [it, inserted] = tag_index.emplace(tok, static_cast<int>(tags.tag_vocab.size()));
      if (inserted) tags.tag_vocab.push_back(tok);
      tags.positives[j].push_back(it->second);
    }
    std::sort(tags.positives[j].begin(), tags.positives[j].end());
    tags.backfilled[j] = true;
  }

  if (!no_eligible_tokens.empty()) {
    std::string ids;
    for (int j : no_eligible_tokens) ids += " " + std::to_string(j);
    fail("backfill_tags: items with no tags and no eligible tokens:", ids);
  }

  tags.n_tags = static_cast<int>(tags.tag_vocab.size());
  return tags;
}

}  // namespace rhcnn
