#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rhcnn/common.hpp"

namespace rhcnn {

struct RawItem {
  std::string external_id;
  std::string title;
  std::string abstract_text;
};

// CiteULike-style raw data: items with text, implicit-feedback interactions,
// per-item tags, and cross-citations. Citations are stored but feed nothing.
struct RawDataset {
  std::vector<RawItem> items;
  int n_users = 0;
  std::vector<std::pair<int, int>> interactions;  // (user, item), deduplicated
  std::vector<std::vector<int>> tags_of_item;     // raw tag indices, per item
  std::vector<std::string> tag_vocab;
  std::vector<std::vector<int>> citations_of_item;
};

// Column mapping and line conventions; distributions differ in header rows,
// column order, and whether .dat lines carry a leading element count.
struct DatasetFormat {
  int id_column = 0;
  int title_column = 1;
  int abstract_column = 2;
  bool has_header = true;
  bool leading_count = false;
  int index_base = 0;
};

struct DatasetPaths {
  std::string items_csv;
  std::string users_dat;
  std::string tags_dat;
  std::string tag_vocab_txt;
  std::string citations_dat;  // optional; empty = absent
};

namespace detail {

// RFC 4180 CSV: quoted fields may contain commas, doubled quotes, newlines.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& content,
                                                       const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  const auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() || !row.empty()) end_row();
    } else if (c != '\r') {
      field.push_back(c);
      field_started = true;
    }
  }
  if (!field.empty() || !row.empty()) end_row();
  require(!in_quotes, path, ": unterminated quoted field at end of file");
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: ", path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

// Space-separated index lines, optionally prefixed with an element count.
inline std::vector<std::vector<int>> parse_index_lines(const std::string& path,
                                                       const DatasetFormat& fmt) {
  const std::string content = read_file(path);
  std::vector<std::vector<int>> lines;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= content.size()) {
    const std::size_t eol = std::min(content.find('\n', pos), content.size());
    std::string line = content.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    if (eol >= content.size() && line.empty()) break;

    std::vector<int> ids;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      if (j > i) {
        const std::string tok = line.substr(i, j - i);
        int value = 0;
        try {
          std::size_t used = 0;
          value = std::stoi(tok, &used);
          require(used == tok.size(), "");
        } catch (const std::exception&) {
          fail(path, ":", line_no, ": malformed index '", tok, "'");
        }
        ids.push_back(value);
      }
      i = j;
    }
    if (fmt.leading_count) {
      require(!ids.empty(), path, ":", line_no, ": missing element count");
      const int declared = ids.front();
      ids.erase(ids.begin());
      require(declared == static_cast<int>(ids.size()), path, ":", line_no,
              ": declared count ", declared, " but found ", ids.size(), " entries");
    }
    for (int& id : ids) {
      id -= fmt.index_base;
      require(id >= 0, path, ":", line_no, ": index below base");
    }
    lines.push_back(std::move(ids));
    if (eol >= content.size()) break;
    pos = eol + 1;
  }
  return lines;
}

}  // namespace detail

// Reads the raw files, validates every id reference, and deduplicates
// (user, item) interaction pairs.
inline RawDataset parse_raw(const DatasetPaths& paths, const DatasetFormat& fmt = {}) {
  RawDataset data;

  // Items.
  const auto rows = detail::parse_csv(detail::read_file(paths.items_csv), paths.items_csv);
  const int max_col = std::max({fmt.id_column, fmt.title_column, fmt.abstract_column});
  std::size_t first = fmt.has_header ? 1 : 0;
  for (std::size_t r = first; r < rows.size(); ++r) {
    require(static_cast<int>(rows[r].size()) > max_col, paths.items_csv, ":", r + 1,
            ": expected at least ", max_col + 1, " columns, found ", rows[r].size());
    data.items.push_back({rows[r][fmt.id_column], rows[r][fmt.title_column],
                          rows[r][fmt.abstract_column]});
  }
  const int n_items = static_cast<int>(data.items.size());

  // Interactions: line i of users.dat lists the items in user i's library.
  const auto user_lines = detail::parse_index_lines(paths.users_dat, fmt);
  data.n_users = static_cast<int>(user_lines.size());
  std::set<std::pair<int, int>> seen;
  for (int u = 0; u < data.n_users; ++u) {
    for (int j : user_lines[u]) {
      require(j < n_items, paths.users_dat, ": user ", u, " references unknown item ", j);
      if (seen.insert({u, j}).second) data.interactions.emplace_back(u, j);
    }
  }

  // Tags: line j of tags.dat lists the tag indices of item j.
  {
    std::ifstream in(paths.tag_vocab_txt);
    require(in.good(), "cannot open file: ", paths.tag_vocab_txt);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      data.tag_vocab.push_back(line);
    }
    while (!data.tag_vocab.empty() && data.tag_vocab.back().empty()) data.tag_vocab.pop_back();
  }
  const auto tag_lines = detail::parse_index_lines(paths.tags_dat, fmt);
  require(static_cast<int>(tag_lines.size()) <= n_items, paths.tags_dat, ": ", tag_lines.size(),
          " lines but only ", n_items, " items");
  data.tags_of_item.assign(n_items, {});
  const int n_tags = static_cast<int>(data.tag_vocab.size());
  for (std::size_t j = 0; j < tag_lines.size(); ++j) {
    for (int t : tag_lines[j]) {
      require(t < n_tags, paths.tags_dat, ": item ", j, " references unknown tag ", t);
    }
    auto tags = tag_lines[j];
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    data.tags_of_item[j] = std::move(tags);
  }

  // Citations: parsed and stored, used by nothing downstream.
  data.citations_of_item.assign(n_items, {});
  if (!paths.citations_dat.empty()) {
    const auto cite_lines = detail::parse_index_lines(paths.citations_dat, fmt);
    require(static_cast<int>(cite_lines.size()) <= n_items, paths.citations_dat, ": ",
            cite_lines.size(), " lines but only ", n_items, " items");
    for (std::size_t j = 0; j < cite_lines.size(); ++j) {
      for (int c : cite_lines[j]) {
        require(c < n_items, paths.citations_dat, ": item ", j, " cites unknown item ", c);
      }
      data.citations_of_item[j] = cite_lines[j];
    }
  }

  return data;
}

}  // namespace rhcnn
