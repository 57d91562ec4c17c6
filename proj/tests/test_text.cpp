#include <catch2/catch_amalgamated.hpp>

#include "rhcnn/rng.hpp"
#include "rhcnn/text.hpp"

using namespace rhcnn;

TEST_CASE("tokenize lowercases, splits, and replaces digit-only tokens") {
  CHECK(tokenize("Deep Learning", "We propose 3 methods.") ==
        std::vector<std::string>{"deep", "learning", "we", "propose", "<NUM>", "methods"});
  CHECK(tokenize("", "").empty());
  // Mixed alphanumerics keep their lexical content.
  CHECK(tokenize("A 2-stage model", "") == std::vector<std::string>{"a", "2-stage", "model"});
}

TEST_CASE("tokenize strips surrounding punctuation and keeps stop words") {
  CHECK(tokenize("(Hello), world!!", "") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("the of and", "") == std::vector<std::string>{"the", "of", "and"});
  CHECK(tokenize("--- ...", "").empty());  // punctuation-only tokens vanish
  CHECK(tokenize("3.5 12 1,000", "") == std::vector<std::string>{"3.5", "<NUM>", "1,000"});
}

TEST_CASE("vocabulary applies the minimum count threshold") {
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 4; ++i) docs.push_back({"qubit"});
  for (int i = 0; i < 5; ++i) docs.push_back({"model"});
  const Vocabulary vocab = build_vocabulary(docs, 5);
  CHECK_FALSE(vocab.contains("qubit"));
  CHECK(vocab.contains("model"));
  CHECK(vocab.id_of("qubit") == kUnkId);
  CHECK(vocab.id_of("model") >= kNumSpecialTokens);
}

TEST_CASE("empty corpus yields only the special tokens") {
  const Vocabulary vocab = build_vocabulary({}, 5);
  REQUIRE(vocab.size() == 3);
  CHECK(vocab.id_to_token[kPadId] == "<PAD>");
  CHECK(vocab.id_to_token[kUnkId] == "<UNK>");
  CHECK(vocab.id_to_token[kNumId] == "<NUM>");
}

TEST_CASE("vocabulary order is frequency then lexicographic") {
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 7; ++i) docs.push_back({"beta"});
  for (int i = 0; i < 7; ++i) docs.push_back({"alpha"});
  for (int i = 0; i < 9; ++i) docs.push_back({"gamma"});
  const Vocabulary vocab = build_vocabulary(docs, 5);
  CHECK(vocab.id_of("gamma") == 3);
  CHECK(vocab.id_of("alpha") == 4);
  CHECK(vocab.id_of("beta") == 5);
}

TEST_CASE("encoding truncates to the first max_length tokens") {
  std::vector<std::vector<std::string>> docs;
  std::vector<std::string> words;
  for (int i = 0; i < 350; ++i) words.push_back("w" + std::to_string(i % 40));
  for (int i = 0; i < 6; ++i) docs.push_back(words);
  const Vocabulary vocab = build_vocabulary(docs, 5);

  const auto short_ids = encode_tokens(words, vocab, 200);
  REQUIRE(short_ids.size() == 200);
  const auto long_ids = encode_tokens(words, vocab, 400);
  REQUIRE(long_ids.size() == 350);  // no padding is ever stored
  for (std::size_t t = 0; t < short_ids.size(); ++t) CHECK(short_ids[t] == long_ids[t]);

  CHECK(encode_tokens({"zzzzz"}, vocab, 200) == std::vector<std::int32_t>{kUnkId});
}

TEST_CASE("round trip: decode then re-encode reproduces every sequence") {
  Rng rng(11);
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 30; ++d) {
    std::vector<std::string> doc;
    const int len = rng.uniform_int(1, 60);
    for (int t = 0; t < len; ++t) doc.push_back("tok" + std::to_string(rng.uniform_int(0, 25)));
    docs.push_back(doc);
  }
  const Vocabulary vocab = build_vocabulary(docs, 5);
  for (const auto& doc : docs) {
    const auto ids = encode_tokens(doc, vocab, 100);
    std::vector<std::string> decoded;
    for (auto id : ids) decoded.push_back(vocab.id_to_token[id]);
    CHECK(encode_tokens(decoded, vocab, 100) == ids);
  }
}

TEST_CASE("identical corpora build identical vocabularies") {
  Rng rng(7);
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 40; ++d) {
    std::vector<std::string> doc;
    for (int t = 0; t < 20; ++t) doc.push_back("t" + std::to_string(rng.uniform_int(0, 12)));
    docs.push_back(doc);
  }
  const Vocabulary a = build_vocabulary(docs, 5);
  const Vocabulary b = build_vocabulary(docs, 5);
  CHECK(a.id_to_token == b.id_to_token);
}
