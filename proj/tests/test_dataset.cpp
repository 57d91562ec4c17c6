#include <catch2/catch_amalgamated.hpp>

#include "rhcnn/archive.hpp"
#include "rhcnn/corpus.hpp"
#include "rhcnn/dataset.hpp"
#include "support/tmpdir.hpp"

using namespace rhcnn;
using testsupport::TempDir;
using testsupport::read_file;
using testsupport::write_file;

namespace {

// Four items, three users, a tag vocabulary of three, one citation line.
TempDir make_toy_dataset() {
  TempDir dir("dataset");
  write_file(dir.str("raw-data.csv"),
             "id,title,abstract\n"
             "a1,Graph Kernels,\"We study graph kernels, deeply.\"\n"
             "a2,Sparse Coding,Dictionary learning with 10 atoms\n"
             "a3,\"Markov, Fields\",Inference in random fields\n"
             "a4,Deep Ranking,Ranking with deep networks\n");
  write_file(dir.str("users.dat"), "0 1\n1 2 1\n3\n");
  write_file(dir.str("tags.dat"), "0 1\n1\n\n2\n");
  write_file(dir.str("tag-vocab.txt"), "graphs\nsparsity\nranking\n");
  write_file(dir.str("citations.dat"), "1 2\n\n\n0\n");
  return dir;
}

DatasetPaths paths_in(const TempDir& dir) {
  return {dir.str("raw-data.csv"), dir.str("users.dat"), dir.str("tags.dat"),
          dir.str("tag-vocab.txt"), dir.str("citations.dat")};
}

}  // namespace

TEST_CASE("parse_raw reads the toy dataset") {
  const TempDir dir = make_toy_dataset();
  const RawDataset raw = parse_raw(paths_in(dir));

  REQUIRE(raw.items.size() == 4);
  CHECK(raw.items[0].title == "Graph Kernels");
  CHECK(raw.items[0].abstract_text == "We study graph kernels, deeply.");
  CHECK(raw.items[2].title == "Markov, Fields");
  CHECK(raw.n_users == 3);
  CHECK(raw.interactions ==
        std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 2}, {1, 1}, {2, 3}});
  CHECK(raw.tags_of_item[0] == std::vector<int>{0, 1});
  CHECK(raw.tags_of_item[2].empty());
  CHECK(raw.citations_of_item[0] == std::vector<int>{1, 2});
  CHECK(raw.citations_of_item[3] == std::vector<int>{0});
}

TEST_CASE("duplicate interactions collapse to one") {
  const TempDir dir = make_toy_dataset();
  write_file(dir.str("users.dat"), "0 1 0 0\n\n\n");
  const RawDataset raw = parse_raw(paths_in(dir));
  CHECK(raw.interactions == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}});
}

TEST_CASE("empty interactions file is a valid dataset") {
  const TempDir dir = make_toy_dataset();
  write_file(dir.str("users.dat"), "");
  const RawDataset raw = parse_raw(paths_in(dir));
  CHECK(raw.n_users == 0);
  CHECK(raw.interactions.empty());
}

TEST_CASE("dangling item reference names the id") {
  const TempDir dir = make_toy_dataset();
  write_file(dir.str("users.dat"), "0 9\n");
  CHECK_THROWS_WITH(parse_raw(paths_in(dir)), Catch::Matchers::ContainsSubstring("9"));
}

TEST_CASE("malformed index reports the line number") {
  const TempDir dir = make_toy_dataset();
  write_file(dir.str("users.dat"), "0 1\nxyz\n");
  CHECK_THROWS_WITH(parse_raw(paths_in(dir)), Catch::Matchers::ContainsSubstring(":2"));
}

TEST_CASE("leading-count and one-based index conventions") {
  const TempDir dir = make_toy_dataset();
  write_file(dir.str("users.dat"), "2 1 2\n1 3\n1 4\n");
  write_file(dir.str("tags.dat"), "2 1 2\n1 2\n1 3\n1 1\n");
  write_file(dir.str("citations.dat"), "0\n0\n0\n0\n");
  DatasetFormat fmt;
  fmt.leading_count = true;
  fmt.index_base = 1;
  const RawDataset raw = parse_raw(paths_in(dir), fmt);
  CHECK(raw.interactions == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 2}, {2, 3}});
  CHECK(raw.tags_of_item[0] == std::vector<int>{0, 1});

  write_file(dir.str("users.dat"), "3 1 2\n1 3\n1 4\n");
  CHECK_THROWS_WITH(parse_raw(paths_in(dir), fmt),
                    Catch::Matchers::ContainsSubstring("declared count"));
}

TEST_CASE("build_corpus drops empty-text items and remaps both matrices") {
  const TempDir dir = make_toy_dataset();
  write_file(dir.str("raw-data.csv"),
             "id,title,abstract\n"
             "a1,Graph Kernels,study of kernels\n"
             "a2,...,\n"  // tokenizes to nothing
             "a3,Markov Fields,random fields\n"
             "a4,Deep Ranking,deep networks\n");
  const RawDataset raw = parse_raw(paths_in(dir));
  CorpusParams params;
  params.min_token_count = 1;
  params.backfill_k = 2;
  const CorpusBundle bundle = build_corpus(raw, params);

  CHECK(bundle.dropped_external_ids == std::vector<std::string>{"a2"});
  REQUIRE(bundle.corpus.n_items() == 3);
  CHECK(bundle.item_external_ids == std::vector<std::string>{"a1", "a3", "a4"});
  // user 0 liked items 0,1 (raw) -> compact {0}; user 1 liked raw 1,2 -> compact {1}.
  CHECK(bundle.interactions.positives[0] == std::vector<int>{0});
  CHECK(bundle.interactions.positives[1] == std::vector<int>{1});
  CHECK(bundle.interactions.positives[2] == std::vector<int>{2});
  // raw item 2 (untagged) is compact item 1 and gets backfilled.
  CHECK(bundle.tags.backfilled[1]);
  CHECK_FALSE(bundle.tags.backfilled[0]);
}

TEST_CASE("archive round trip preserves the bundle and is byte-identical") {
  const TempDir dir = make_toy_dataset();
  const RawDataset raw = parse_raw(paths_in(dir));
  CorpusParams params;
  params.min_token_count = 1;
  params.max_length = 6;
  const CorpusBundle bundle = build_corpus(raw, params);

  TempDir out1("archive1"), out2("archive2");
  write_corpus_archive(bundle, out1.str());
  const CorpusBundle loaded = read_corpus_archive(out1.str());

  CHECK(loaded.corpus.vocab.id_to_token == bundle.corpus.vocab.id_to_token);
  CHECK(loaded.corpus.sequences == bundle.corpus.sequences);
  CHECK(loaded.interactions.positives == bundle.interactions.positives);
  CHECK(loaded.interactions.n_users == bundle.interactions.n_users);
  CHECK(loaded.tags.positives == bundle.tags.positives);
  CHECK(loaded.tags.tag_vocab == bundle.tags.tag_vocab);
  CHECK(loaded.tags.backfilled == bundle.tags.backfilled);
  CHECK(loaded.item_titles == bundle.item_titles);

  write_corpus_archive(loaded, out2.str());
  for (const char* name : {"vocab.txt", "sequences.bin", "interactions.csv", "tags.csv",
                           "items.csv", "manifest.json"}) {
    CHECK(read_file(out1.str(name)) == read_file(out2.str(name)));
  }
}

TEST_CASE("citeulike-a scale bookkeeping: density from counts") {
  InteractionMatrix m;
  m.n_users = 5551;
  m.n_items = 16980;
  // 204,986 interactions spread over the first users.
  m.positives.assign(m.n_users, {});
  std::size_t remaining = 204986;
  int item = 0;
  for (int u = 0; u < m.n_users && remaining > 0; ++u) {
    for (int k = 0; k < 40 && remaining > 0; ++k, --remaining) {
      m.positives[u].push_back(item = (item + 7) % m.n_items);
    }
  }
  CHECK(m.interaction_count() == 204986);
  CHECK_THAT(m.density(), Catch::Matchers::WithinAbs(0.00217, 0.0001));
}
