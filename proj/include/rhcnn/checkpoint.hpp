#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhcnn/common.hpp"
#include "rhcnn/model.hpp"

namespace rhcnn {

// Single-file checkpoint: magic, format version, a JSON header (configs,
// vocabulary hash, counts), then named parameter blocks as 32-bit
// little-endian floats with shape headers.
inline constexpr char kCheckpointMagic[4] = {'R', 'H', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32_ck(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline std::uint32_t get_u32_ck(std::istream& in) {
  unsigned char b[4];
  require(static_cast<bool>(in.read(reinterpret_cast<char*>(b), 4)), "checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& out, float f) {
  std::uint32_t v;
  static_assert(sizeof(v) == sizeof(f));
  std::memcpy(&v, &f, 4);
  put_u32_ck(out, v);
}

inline float get_f32(std::istream& in) {
  const std::uint32_t v = get_u32_ck(in);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

}  // namespace detail

inline nlohmann::ordered_json encoder_config_to_json(const EncoderConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"vocab_size", c.vocab_size},
          {"embedding_dim", c.embedding_dim},
          {"stage1_dim", c.stage1_dim},
          {"stage2_dim", c.stage2_dim},
          {"conv1_filters", c.conv1_filters},
          {"output_dim", c.output_dim},
          {"conv_kernel_width", c.conv_kernel_width},
          {"dropout", {c.dropout1, c.dropout2, c.dropout3}},
          {"bidirectional", c.bidirectional}};
}

inline EncoderConfig encoder_config_from_json(const nlohmann::ordered_json& j) {
  EncoderConfig c;
  c.kind = encoder_kind_from_string(j.at("kind").get<std::string>());
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.stage1_dim = j.at("stage1_dim").get<int>();
  c.stage2_dim = j.at("stage2_dim").get<int>();
  c.conv1_filters = j.at("conv1_filters").get<int>();
  c.output_dim = j.at("output_dim").get<int>();
  c.conv_kernel_width = j.at("conv_kernel_width").get<int>();
  c.dropout1 = j.at("dropout")[0].get<double>();
  c.dropout2 = j.at("dropout")[1].get<double>();
  c.dropout3 = j.at("dropout")[2].get<double>();
  c.bidirectional = j.at("bidirectional").get<bool>();
  return c;
}

inline nlohmann::ordered_json multitask_config_to_json(const MultiTaskConfig& c) {
  return {{"lambda", c.lambda},
          {"c_pos", c.c_pos},
          {"c_neg", c.c_neg},
          {"tag_negatives_per_positive", c.tag_negatives_per_positive}};
}

inline MultiTaskConfig multitask_config_from_json(const nlohmann::ordered_json& j) {
  MultiTaskConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.c_pos = j.at("c_pos").get<double>();
  c.c_neg = j.at("c_neg").get<double>();
  c.tag_negatives_per_positive = j.at("tag_negatives_per_positive").get<int>();
  return c;
}

struct CheckpointMeta {
  std::string vocab_hash;
  int n_users = 0, n_items = 0, n_tags = 0;
  int step = 0;
  double validation_recall = -1.0;
};

inline void save_checkpoint(const std::string& path, Model& model, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write checkpoint: ", path);
  out.write(kCheckpointMagic, 4);
  detail::put_u32_ck(out, kCheckpointVersion);

  nlohmann::ordered_json header;
  header["version"] = kVersion;
  header["encoder"] = encoder_config_to_json(model.encoder_config);
  header["multitask"] = multitask_config_to_json(model.multitask);
  header["vocab_hash"] = meta.vocab_hash;
  header["n_users"] = meta.n_users;
  header["n_items"] = meta.n_items;
  header["n_tags"] = meta.n_tags;
  header["step"] = meta.step;
  header["validation_recall"] = meta.validation_recall;
  const std::string hs = header.dump();
  detail::put_u32_ck(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  const auto refs = model.refs();
  detail::put_u32_ck(out, static_cast<std::uint32_t>(refs.size()));
  for (const ParamRef& r : refs) {
    detail::put_u32_ck(out, static_cast<std::uint32_t>(r.name.size()));
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    detail::put_u32_ck(out, static_cast<std::uint32_t>(r.rows));
    detail::put_u32_ck(out, static_cast<std::uint32_t>(r.cols));
    for (Eigen::Index k = 0; k < r.size(); ++k) {
      detail::put_f32(out, static_cast<float>(r.data[k]));
    }
  }
  require(out.good(), "checkpoint write failed: ", path);
}

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint: ", path);
  char magic[4];
  require(static_cast<bool>(in.read(magic, 4)), "checkpoint: truncated file");
  require(std::memcmp(magic, kCheckpointMagic, 4) == 0, "not a checkpoint file: ", path);
  const std::uint32_t version = detail::get_u32_ck(in);
  require(version == kCheckpointVersion, "unsupported checkpoint version ", version);

  const std::uint32_t hlen = detail::get_u32_ck(in);
  std::string hs(hlen, '\0');
  require(static_cast<bool>(in.read(hs.data(), hlen)), "checkpoint: truncated header");
  const auto header = nlohmann::ordered_json::parse(hs);

  LoadedCheckpoint lc;
  lc.model.encoder_config = encoder_config_from_json(header.at("encoder"));
  lc.model.multitask = multitask_config_from_json(header.at("multitask"));
  lc.meta.vocab_hash = header.at("vocab_hash").get<std::string>();
  lc.meta.n_users = header.at("n_users").get<int>();
  lc.meta.n_items = header.at("n_items").get<int>();
  lc.meta.n_tags = header.at("n_tags").get<int>();
  lc.meta.step = header.at("step").get<int>();
  lc.meta.validation_recall = header.at("validation_recall").get<double>();

  // Allocate parameter storage, then fill the named blocks.
  Rng scratch(0);
  lc.model.encoder = init_encoder(lc.model.encoder_config, scratch);
  lc.model.tables = init_tables(lc.meta.n_users, lc.meta.n_items, lc.meta.n_tags,
                                lc.model.encoder_config.output_dim, scratch);

  std::map<std::string, ParamRef> by_name;
  for (ParamRef& r : lc.model.refs()) by_name.emplace(r.name, r);

  const std::uint32_t n_blocks = detail::get_u32_ck(in);
  require(n_blocks == by_name.size(), "checkpoint: expected ", by_name.size(),
          " parameter blocks, found ", n_blocks);
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    const std::uint32_t nlen = detail::get_u32_ck(in);
    std::string name(nlen, '\0');
    require(static_cast<bool>(in.read(name.data(), nlen)), "checkpoint: truncated block name");
    const auto it = by_name.find(name);
    require(it != by_name.end(), "checkpoint: unknown parameter block '", name, "'");
    const std::uint32_t rows = detail::get_u32_ck(in);
    const std::uint32_t cols = detail::get_u32_ck(in);
    require(rows == static_cast<std::uint32_t>(it->second.rows) &&
                cols == static_cast<std::uint32_t>(it->second.cols),
            "checkpoint: block '", name, "' has shape ", rows, "x", cols, ", expected ",
            it->second.rows, "x", it->second.cols);
    for (Eigen::Index k = 0; k < it->second.size(); ++k) {
      it->second.data[k] = static_cast<double>(detail::get_f32(in));
    }
  }
  return lc;
}

}  // namespace rhcnn
