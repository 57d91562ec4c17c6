#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rhcnn/corpus.hpp"
#include "rhcnn/dataset.hpp"
#include "rhcnn/rng.hpp"

namespace testsupport {

// Random dataset with mild popularity structure; documents share a small
// lexicon so the vocabulary is dense.
inline rhcnn::RawDataset make_random_dataset(int n_users, int n_items, int doc_len, int n_tags,
                                             int min_likes, int max_likes, std::uint64_t seed) {
  rhcnn::Rng rng(seed);
  rhcnn::RawDataset raw;
  const int lexicon = std::max(12, doc_len);
  for (int j = 0; j < n_items; ++j) {
    std::string abstract;
    for (int t = 0; t < doc_len - 2; ++t) {
      abstract += "w" + std::to_string(rng.uniform_int(0, lexicon)) + " ";
    }
    raw.items.push_back({"item" + std::to_string(j),
                         "title" + std::to_string(j % 7) + " w" + std::to_string(j % lexicon),
                         abstract});
  }
  raw.n_users = n_users;
  for (int u = 0; u < n_users; ++u) {
    const int n_likes = rng.uniform_int(min_likes, max_likes + 1);
    std::vector<int> items(n_items);
    std::iota(items.begin(), items.end(), 0);
    rng.shuffle(items);
    for (int k = 0; k < n_likes; ++k) raw.interactions.emplace_back(u, items[k]);
  }
  raw.tags_of_item.assign(n_items, {});
  for (int l = 0; l < n_tags; ++l) raw.tag_vocab.push_back("tag" + std::to_string(l));
  for (int j = 0; j < n_items; ++j) {
    const int k = rng.uniform_int(1, 4);
    std::vector<int> tags(n_tags);
    std::iota(tags.begin(), tags.end(), 0);
    rng.shuffle(tags);
    tags.resize(std::min(k, n_tags));
    std::sort(tags.begin(), tags.end());
    raw.tags_of_item[j] = tags;
  }
  raw.citations_of_item.assign(n_items, {});
  return raw;
}

struct TopicalSpec {
  int n_topics = 5;
  int words_per_topic = 20;
  int items_per_topic = 60;
  int users_per_topic = 10;
  int topic_tokens_per_doc = 28;  // topical words scattered through the text
  int doc_length = 200;           // total length after filler padding
  int tags_per_topic = 30;
  int tags_per_item = 3;
  double like_prob = 0.8;
  std::uint64_t seed = 21;
};

// Topic-separable corpus: disjoint topic vocabularies buried in shared
// filler, users loyal to a single topic, tags drawn from the item's topic.
inline rhcnn::RawDataset make_topical_dataset(const TopicalSpec& spec) {
  rhcnn::Rng rng(spec.seed);
  rhcnn::RawDataset raw;
  const int n_items = spec.n_topics * spec.items_per_topic;
  const int filler_lexicon = 30;

  std::vector<int> topic_of_item(n_items);
  for (int j = 0; j < n_items; ++j) {
    const int topic = j % spec.n_topics;  // topics interleaved across indices
    topic_of_item[j] = topic;
    std::vector<std::string> tokens;
    for (int t = 0; t < spec.topic_tokens_per_doc; ++t) {
      tokens.push_back("topic" + std::to_string(topic) + "word" +
                       std::to_string(rng.uniform_int(0, spec.words_per_topic)));
    }
    while (static_cast<int>(tokens.size()) < spec.doc_length) {
      tokens.push_back("filler" + std::to_string(rng.uniform_int(0, filler_lexicon)));
    }
    rng.shuffle(tokens);
    std::string abstract;
    for (std::size_t t = 1; t < tokens.size(); ++t) abstract += tokens[t] + " ";
    raw.items.push_back({"item" + std::to_string(j), tokens[0], abstract});
  }

  raw.n_users = spec.n_topics * spec.users_per_topic;
  for (int u = 0; u < raw.n_users; ++u) {
    const int topic = u % spec.n_topics;
    for (int j = 0; j < n_items; ++j) {
      if (topic_of_item[j] == topic && rng.uniform01() < spec.like_prob) {
        raw.interactions.emplace_back(u, j);
      }
    }
  }

  for (int topic = 0; topic < spec.n_topics; ++topic) {
    for (int t = 0; t < spec.tags_per_topic; ++t) {
      raw.tag_vocab.push_back("topic" + std::to_string(topic) + "tag" + std::to_string(t));
    }
  }
  raw.tags_of_item.assign(n_items, {});
  for (int j = 0; j < n_items; ++j) {
    const int topic = topic_of_item[j];
    std::vector<int> pool(spec.tags_per_topic);
    std::iota(pool.begin(), pool.end(), topic * spec.tags_per_topic);
    rng.shuffle(pool);
    pool.resize(spec.tags_per_item);
    std::sort(pool.begin(), pool.end());
    raw.tags_of_item[j] = pool;
  }
  raw.citations_of_item.assign(n_items, {});
  return raw;
}

// Raw files in the documented on-disk formats, for driving the CLI.
inline void write_raw_files(const rhcnn::RawDataset& raw, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream f(dir + "/raw-data.csv");
    f << "id,title,abstract\n";
    for (const auto& item : raw.items) {
      f << item.external_id << "," << item.title << "," << item.abstract_text << "\n";
    }
  }
  {
    std::vector<std::vector<int>> per_user(raw.n_users);
    for (const auto& [u, j] : raw.interactions) per_user[u].push_back(j);
    std::ofstream f(dir + "/users.dat");
    for (const auto& items : per_user) {
      for (std::size_t k = 0; k < items.size(); ++k) f << (k ? " " : "") << items[k];
      f << "\n";
    }
  }
  {
    std::ofstream f(dir + "/tags.dat");
    for (const auto& tags : raw.tags_of_item) {
      for (std::size_t k = 0; k < tags.size(); ++k) f << (k ? " " : "") << tags[k];
      f << "\n";
    }
  }
  {
    std::ofstream f(dir + "/tag-vocab.txt");
    for (const auto& t : raw.tag_vocab) f << t << "\n";
  }
}

inline rhcnn::CorpusBundle build_bundle(const rhcnn::RawDataset& raw, int max_length,
                                        int backfill_k = 5) {
  rhcnn::CorpusParams params;
  params.max_length = max_length;
  params.min_token_count = 1;
  params.backfill_k = backfill_k;
  return rhcnn::build_corpus(raw, params);
}

}  // namespace testsupport
