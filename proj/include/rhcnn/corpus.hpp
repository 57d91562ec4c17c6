#pragma once

#include <string>
#include <vector>

#include "rhcnn/dataset.hpp"
#include "rhcnn/interactions.hpp"
#include "rhcnn/tags.hpp"
#include "rhcnn/text.hpp"

namespace rhcnn {

struct CorpusParams {
  int max_length = 200;
  int min_token_count = 5;
  int backfill_k = 5;
};

// Fully preprocessed dataset: tokenized corpus plus interaction and tag
// matrices over a compact item index. Items whose text tokenizes to nothing
// are dropped everywhere and listed in dropped_external_ids.
struct CorpusBundle {
  DocumentCorpus corpus;
  InteractionMatrix interactions;
  TagMatrix tags;
  CorpusParams params;

  std::vector<std::string> item_external_ids;  // compact index -> id
  std::vector<std::string> item_titles;
  std::vector<std::string> dropped_external_ids;
};

inline CorpusBundle build_corpus(const RawDataset& raw, const CorpusParams& params = {}) {
  const int n_raw = static_cast<int>(raw.items.size());

  std::vector<std::vector<std::string>> token_lists(n_raw);
  for (int j = 0; j < n_raw; ++j) {
    token_lists[j] = tokenize(raw.items[j].title, raw.items[j].abstract_text);
  }

  CorpusBundle bundle;
  bundle.params = params;

  // Compact index over items with nonempty text; the content pathway is
  // mandatory so empty-text items leave the corpus and both matrices.
  std::vector<int> compact_of(n_raw, -1);
  for (int j = 0; j < n_raw; ++j) {
    if (token_lists[j].empty()) {
      bundle.dropped_external_ids.push_back(raw.items[j].external_id);
      continue;
    }
    compact_of[j] = static_cast<int>(bundle.item_external_ids.size());
    bundle.item_external_ids.push_back(raw.items[j].external_id);
    bundle.item_titles.push_back(raw.items[j].title);
  }
  const int n_items = static_cast<int>(bundle.item_external_ids.size());
  require(n_items > 0, "build_corpus: every item has empty text");

  std::vector<std::vector<std::string>> kept_tokens;
  kept_tokens.reserve(n_items);
  for (int j = 0; j < n_raw; ++j) {
    if (compact_of[j] >= 0) kept_tokens.push_back(std::move(token_lists[j]));
  }

  bundle.corpus.vocab = build_vocabulary(kept_tokens, params.min_token_count);
  bundle.corpus.max_length = params.max_length;
  bundle.corpus.sequences.reserve(n_items);
  for (const auto& tokens : kept_tokens) {
    bundle.corpus.sequences.push_back(
        encode_tokens(tokens, bundle.corpus.vocab, params.max_length));
  }

  bundle.interactions.n_users = raw.n_users;
  bundle.interactions.n_items = n_items;
  bundle.interactions.positives.assign(raw.n_users, {});
  for (const auto& [u, j] : raw.interactions) {
    if (compact_of[j] >= 0) bundle.interactions.positives[u].push_back(compact_of[j]);
  }
  for (auto& p : bundle.interactions.positives) std::sort(p.begin(), p.end());

  std::vector<std::vector<int>> human_tags(n_items);
  for (int j = 0; j < n_raw; ++j) {
    if (compact_of[j] >= 0) human_tags[compact_of[j]] = raw.tags_of_item[j];
  }
  bundle.tags = backfill_tags(human_tags, raw.tag_vocab, bundle.corpus, params.backfill_k);

  return bundle;
}

}  // namespace rhcnn
