#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "rhcnn/rng.hpp"
#include "rhcnn/stopwords.hpp"
#include "rhcnn/tags.hpp"
#include "rhcnn/text.hpp"

using namespace rhcnn;

namespace {

DocumentCorpus corpus_from_docs(const std::vector<std::vector<std::string>>& docs,
                                int min_count = 1) {
  DocumentCorpus corpus;
  corpus.vocab = build_vocabulary(docs, min_count);
  corpus.max_length = 1000;
  for (const auto& d : docs) corpus.sequences.push_back(encode_tokens(d, corpus.vocab, 1000));
  return corpus;
}

// Independent tf-idf: plain loops over token strings, no shared code with
// the implementation beyond the tokenizer output.
std::vector<std::string> brute_force_tfidf(const std::vector<std::vector<std::string>>& docs,
                                           int doc, int k) {
  const double n = static_cast<double>(docs.size());
  std::map<std::string, int> df;
  for (const auto& d : docs) {
    std::set<std::string> uniq(d.begin(), d.end());
    for (const auto& t : uniq) ++df[t];
  }
  std::map<std::string, int> tf;
  for (const auto& t : docs[doc]) {
    if (t == "<NUM>" || english_stopwords().count(t) > 0) continue;
    ++tf[t];
  }
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& [t, c] : tf) scored.emplace_back(c * std::log(n / df[t]), t);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> top;
  for (int r = 0; r < std::min<int>(k, scored.size()); ++r) top.push_back(scored[r].second);
  return top;
}

std::vector<std::string> tag_strings(const TagMatrix& tags, int item) {
  std::vector<std::string> out;
  for (int l : tags.positives[item]) out.push_back(tags.tag_vocab[l]);
  return out;
}

}  // namespace

TEST_CASE("three-document worked example") {
  const std::vector<std::vector<std::string>> docs = {
      {"graph", "graph", "theory"}, {"graph", "learning"}, {"theory", "theory", "proofs"}};
  const DocumentCorpus corpus = corpus_from_docs(docs);
  // Doc 0 untagged: "graph" scores tf=2 * ln(3/2) = 0.811, beating "theory".
  const TagMatrix tags = backfill_tags({{}, {0}, {0}}, {"ml"}, corpus, 1);
  CHECK(tags.backfilled[0]);
  CHECK_FALSE(tags.backfilled[1]);
  CHECK(tag_strings(tags, 0) == std::vector<std::string>{"graph"});
}

TEST_CASE("items with human tags are untouched") {
  const std::vector<std::vector<std::string>> docs = {{"alpha", "beta"}, {"beta", "gamma"}};
  const DocumentCorpus corpus = corpus_from_docs(docs);
  const TagMatrix tags = backfill_tags({{0}, {0, 1}}, {"bayesian", "mcmc"}, corpus, 3);
  CHECK(tags.positives[0] == std::vector<int>{0});
  CHECK(tags.positives[1] == std::vector<int>{0, 1});
  CHECK(tags.n_tags == 2);
  CHECK_FALSE(tags.backfilled[0]);
  CHECK_FALSE(tags.backfilled[1]);
}

TEST_CASE("untagged item with fewer eligible tokens than k gets them all") {
  const std::vector<std::vector<std::string>> docs = {{"alpha", "alpha"}, {"beta", "gamma"}};
  const DocumentCorpus corpus = corpus_from_docs(docs);
  const TagMatrix tags = backfill_tags({{}, {0}}, {"x"}, corpus, 5);
  CHECK(tag_strings(tags, 0) == std::vector<std::string>{"alpha"});
}

TEST_CASE("untagged item with no eligible tokens is an error") {
  const std::vector<std::vector<std::string>> docs = {{"the", "of"}, {"beta", "gamma"}};
  const DocumentCorpus corpus = corpus_from_docs(docs);
  CHECK_THROWS_AS(backfill_tags({{}, {0}}, {"x"}, corpus, 2), Error);
}

TEST_CASE("backfill matches the brute-force oracle on random corpora") {
  Rng rng(1234);
  const std::vector<std::string> lexicon = {"rank",   "graph", "kernel", "matrix", "deep",
                                            "sparse", "prior", "markov", "field",  "query"};
  for (int trial = 0; trial < 25; ++trial) {
    const int n_docs = rng.uniform_int(2, 10);
    std::vector<std::vector<std::string>> docs(n_docs);
    for (auto& d : docs) {
      const int len = rng.uniform_int(1, 14);
      for (int t = 0; t < len; ++t) d.push_back(lexicon[rng.uniform_int(0, lexicon.size())]);
    }
    const DocumentCorpus corpus = corpus_from_docs(docs);
    const int k = rng.uniform_int(1, 5);
    std::vector<std::vector<int>> human(n_docs);
    for (int j = 1; j < n_docs; ++j) human[j] = {0};  // doc 0 is the untagged one

    const TagMatrix tags = backfill_tags(human, {"seed-tag"}, corpus, k);
    CHECK(tag_strings(tags, 0) == brute_force_tfidf(docs, 0, k));
  }
}

TEST_CASE("every item carries at least one tag after backfill") {
  Rng rng(99);
  const std::vector<std::string> lexicon = {"alpha", "beta", "gamma", "delta", "epsilon"};
  std::vector<std::vector<std::string>> docs(8);
  for (auto& d : docs) {
    for (int t = 0; t < 6; ++t) d.push_back(lexicon[rng.uniform_int(0, lexicon.size())]);
  }
  const DocumentCorpus corpus = corpus_from_docs(docs);
  std::vector<std::vector<int>> human(8);
  human[2] = {0};
  const TagMatrix tags = backfill_tags(human, {"only"}, corpus, 2);
  for (int j = 0; j < tags.n_items; ++j) CHECK_FALSE(tags.positives[j].empty());
}
