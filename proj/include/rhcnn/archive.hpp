#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhcnn/common.hpp"
#include "rhcnn/corpus.hpp"

namespace rhcnn {

using json = nlohmann::ordered_json;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write file: ", path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  require(out.good(), "write failed: ", path.string());
}

}  // namespace detail

inline std::string vocabulary_text(const Vocabulary& vocab) {
  std::string content;
  for (const auto& tok : vocab.id_to_token) {
    content += tok;
    content += '\n';
  }
  return content;
}

inline std::string vocabulary_hash(const Vocabulary& vocab) {
  return hex64(fnv1a(vocabulary_text(vocab)));
}

// Writes the corpus archive directory: vocab.txt (line number = token id),
// sequences.bin (length-prefixed 32-bit little-endian id lists in item
// order), interactions.csv, tags.csv, items.csv, manifest.json. Rewriting an
// identical bundle produces byte-identical files.
inline void write_corpus_archive(const CorpusBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);

  detail::write_text_file(root / "vocab.txt", vocabulary_text(bundle.corpus.vocab));

  {
    std::ofstream out(root / "sequences.bin", std::ios::binary);
    require(out.good(), "cannot write file: ", (root / "sequences.bin").string());
    for (const auto& seq : bundle.corpus.sequences) {
      detail::put_u32(out, static_cast<std::uint32_t>(seq.size()));
      for (std::int32_t id : seq) detail::put_u32(out, static_cast<std::uint32_t>(id));
    }
    require(out.good(), "write failed: sequences.bin");
  }

  {
    std::string csv = "user,item\n";
    for (int u = 0; u < bundle.interactions.n_users; ++u) {
      for (int j : bundle.interactions.positives[u]) {
        csv += std::to_string(u) + "," + std::to_string(j) + "\n";
      }
    }
    detail::write_text_file(root / "interactions.csv", csv);
  }

  {
    std::string csv = "item,tag,backfilled\n";
    for (int j = 0; j < bundle.tags.n_items; ++j) {
      const char* flag = bundle.tags.backfilled[j] ? "1" : "0";
      for (int l : bundle.tags.positives[j]) {
        csv += std::to_string(j) + "," + std::to_string(l) + "," + flag + "\n";
      }
    }
    detail::write_text_file(root / "tags.csv", csv);
  }

  {
    std::string csv = "item,external_id,title\n";
    for (std::size_t j = 0; j < bundle.item_external_ids.size(); ++j) {
      csv += std::to_string(j) + "," + detail::csv_escape(bundle.item_external_ids[j]) + "," +
             detail::csv_escape(bundle.item_titles[j]) + "\n";
    }
    detail::write_text_file(root / "items.csv", csv);
  }

  json manifest;
  manifest["format"] = "rhcnn-corpus-v1";
  manifest["counts"] = {{"users", bundle.interactions.n_users},
                        {"items", bundle.corpus.n_items()},
                        {"interactions", bundle.interactions.interaction_count()},
                        {"tags", bundle.tags.n_tags},
                        {"vocabulary", bundle.corpus.vocab.size()}};
  manifest["density"] = bundle.interactions.density();
  manifest["preprocessing"] = {{"max_length", bundle.params.max_length},
                               {"min_token_count", bundle.params.min_token_count},
                               {"backfill_k", bundle.params.backfill_k}};
  manifest["vocab_hash"] = vocabulary_hash(bundle.corpus.vocab);
  manifest["dropped_items"] = bundle.dropped_external_ids;
  manifest["tag_vocab"] = bundle.tags.tag_vocab;
  detail::write_text_file(root / "manifest.json", manifest.dump(2) + "\n");
}

inline CorpusBundle read_corpus_archive(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  require(fs::exists(root / "manifest.json"), "not a corpus archive (no manifest.json): ", dir);

  CorpusBundle bundle;
  json manifest;
  {
    std::ifstream in(root / "manifest.json");
    in >> manifest;
  }
  require(manifest.value("format", "") == "rhcnn-corpus-v1", "unsupported corpus format in ", dir);
  bundle.params.max_length = manifest["preprocessing"]["max_length"].get<int>();
  bundle.params.min_token_count = manifest["preprocessing"]["min_token_count"].get<int>();
  bundle.params.backfill_k = manifest["preprocessing"]["backfill_k"].get<int>();
  bundle.dropped_external_ids = manifest["dropped_items"].get<std::vector<std::string>>();

  {
    std::ifstream in(root / "vocab.txt");
    require(in.good(), "cannot open file: ", (root / "vocab.txt").string());
    std::string line;
    while (std::getline(in, line)) bundle.corpus.vocab.id_to_token.push_back(line);
    for (std::int32_t id = 0; id < bundle.corpus.vocab.size(); ++id) {
      bundle.corpus.vocab.token_to_id.emplace(bundle.corpus.vocab.id_to_token[id], id);
    }
  }
  bundle.corpus.max_length = bundle.params.max_length;

  {
    std::ifstream in(root / "sequences.bin", std::ios::binary);
    require(in.good(), "cannot open file: ", (root / "sequences.bin").string());
    std::uint32_t len = 0;
    while (detail::get_u32(in, len)) {
      std::vector<std::int32_t> seq(len);
      for (std::uint32_t t = 0; t < len; ++t) {
        std::uint32_t id = 0;
        require(detail::get_u32(in, id), "sequences.bin: truncated id list");
        seq[t] = static_cast<std::int32_t>(id);
      }
      bundle.corpus.sequences.push_back(std::move(seq));
    }
  }
  const int n_items = bundle.corpus.n_items();

  const auto read_csv_rows = [&](const char* name) {
    return rhcnn::detail::parse_csv(rhcnn::detail::read_file((root / name).string()),
                                    (root / name).string());
  };

  {
    const auto rows = read_csv_rows("interactions.csv");
    bundle.interactions.n_users = manifest["counts"]["users"].get<int>();
    bundle.interactions.n_items = n_items;
    bundle.interactions.positives.assign(bundle.interactions.n_users, {});
    for (std::size_t r = 1; r < rows.size(); ++r) {
      bundle.interactions.positives[std::stoi(rows[r][0])].push_back(std::stoi(rows[r][1]));
    }
  }

  {
    const auto rows = read_csv_rows("tags.csv");
    bundle.tags.tag_vocab = manifest["tag_vocab"].get<std::vector<std::string>>();
    bundle.tags.n_tags = static_cast<int>(bundle.tags.tag_vocab.size());
    bundle.tags.n_items = n_items;
    bundle.tags.positives.assign(n_items, {});
    bundle.tags.backfilled.assign(n_items, false);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const int j = std::stoi(rows[r][0]);
      bundle.tags.positives[j].push_back(std::stoi(rows[r][1]));
      bundle.tags.backfilled[j] = rows[r][2] == "1";
    }
  }

  {
    const auto rows = read_csv_rows("items.csv");
    bundle.item_external_ids.resize(n_items);
    bundle.item_titles.resize(n_items);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const int j = std::stoi(rows[r][0]);
      bundle.item_external_ids[j] = rows[r][1];
      bundle.item_titles[j] = rows[r][2];
    }
  }

  return bundle;
}

}  // namespace rhcnn
