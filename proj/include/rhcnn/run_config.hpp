#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhcnn/checkpoint.hpp"
#include "rhcnn/common.hpp"
#include "rhcnn/corpus.hpp"
#include "rhcnn/dataset.hpp"
#include "rhcnn/evaluator.hpp"
#include "rhcnn/trainer.hpp"

namespace rhcnn {

namespace detail {

// Schemas are closed: an unrecognized key is a config error, not a typo that
// silently does nothing.
inline void check_keys(const nlohmann::ordered_json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  require(obj.is_object(), "config: ", where, " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    require(ok, "config: unknown key '", key, "' in ", where);
  }
}

}  // namespace detail

struct SplitSettings {
  SplitMode mode = SplitMode::warm;
  int n_folds = 5;
  int fold = 0;
  double validation_fraction = 0.05;
  int pin_threshold = 5;
  std::uint64_t seed = 7;
};

// Everything a run needs, merged from the config file and CLI overrides and
// validated up front.
struct RunConfig {
  DatasetPaths dataset;
  DatasetFormat format;
  CorpusParams corpus;
  EncoderConfig encoder;
  MultiTaskConfig multitask;
  TrainConfig train;
  SplitSettings split;
  std::string output_dir;
  std::uint64_t seed = 42;

  nlohmann::ordered_json effective;  // the validated merged document
};

inline RunConfig parse_run_config(const nlohmann::ordered_json& j) {
  detail::check_keys(j, "config root",
                     {"dataset", "corpus", "encoder", "multitask", "train", "split",
                      "output_dir", "seed"});
  RunConfig cfg;
  cfg.effective = j;

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    detail::check_keys(d, "dataset",
                       {"items_csv", "users_dat", "tags_dat", "tag_vocab_txt", "citations_dat",
                        "format"});
    cfg.dataset.items_csv = d.value("items_csv", "");
    cfg.dataset.users_dat = d.value("users_dat", "");
    cfg.dataset.tags_dat = d.value("tags_dat", "");
    cfg.dataset.tag_vocab_txt = d.value("tag_vocab_txt", "");
    cfg.dataset.citations_dat = d.value("citations_dat", "");
    if (d.contains("format")) {
      const auto& f = d.at("format");
      detail::check_keys(f, "dataset.format",
                         {"id_column", "title_column", "abstract_column", "has_header",
                          "leading_count", "index_base"});
      cfg.format.id_column = f.value("id_column", cfg.format.id_column);
      cfg.format.title_column = f.value("title_column", cfg.format.title_column);
      cfg.format.abstract_column = f.value("abstract_column", cfg.format.abstract_column);
      cfg.format.has_header = f.value("has_header", cfg.format.has_header);
      cfg.format.leading_count = f.value("leading_count", cfg.format.leading_count);
      cfg.format.index_base = f.value("index_base", cfg.format.index_base);
    }
  }

  if (j.contains("corpus")) {
    const auto& c = j.at("corpus");
    detail::check_keys(c, "corpus", {"max_length", "min_token_count", "backfill_k"});
    cfg.corpus.max_length = c.value("max_length", cfg.corpus.max_length);
    cfg.corpus.min_token_count = c.value("min_token_count", cfg.corpus.min_token_count);
    cfg.corpus.backfill_k = c.value("backfill_k", cfg.corpus.backfill_k);
    require(cfg.corpus.max_length >= 1, "config: corpus.max_length must be >= 1");
  }

  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    detail::check_keys(e, "encoder",
                       {"kind", "embedding_dim", "stage1_dim", "stage2_dim", "conv1_filters",
                        "output_dim", "conv_kernel_width", "dropout", "bidirectional"});
    if (e.contains("kind")) cfg.encoder.kind = encoder_kind_from_string(e.at("kind"));
    cfg.encoder.embedding_dim = e.value("embedding_dim", cfg.encoder.embedding_dim);
    cfg.encoder.stage1_dim = e.value("stage1_dim", cfg.encoder.stage1_dim);
    cfg.encoder.stage2_dim = e.value("stage2_dim", cfg.encoder.stage2_dim);
    cfg.encoder.conv1_filters = e.value("conv1_filters", cfg.encoder.conv1_filters);
    cfg.encoder.output_dim = e.value("output_dim", cfg.encoder.output_dim);
    cfg.encoder.conv_kernel_width = e.value("conv_kernel_width", cfg.encoder.conv_kernel_width);
    if (e.contains("dropout")) {
      const auto& d = e.at("dropout");
      require(d.is_array() && d.size() == 3, "config: encoder.dropout must be [d1, d2, d3]");
      cfg.encoder.dropout1 = d[0].get<double>();
      cfg.encoder.dropout2 = d[1].get<double>();
      cfg.encoder.dropout3 = d[2].get<double>();
    }
    cfg.encoder.bidirectional = e.value("bidirectional", cfg.encoder.bidirectional);
  }

  if (j.contains("multitask")) {
    const auto& m = j.at("multitask");
    detail::check_keys(m, "multitask", {"lambda", "c_pos", "c_neg", "tag_negatives_per_positive"});
    cfg.multitask.lambda = m.value("lambda", cfg.multitask.lambda);
    cfg.multitask.c_pos = m.value("c_pos", cfg.multitask.c_pos);
    cfg.multitask.c_neg = m.value("c_neg", cfg.multitask.c_neg);
    cfg.multitask.tag_negatives_per_positive =
        m.value("tag_negatives_per_positive", cfg.multitask.tag_negatives_per_positive);
    cfg.multitask.validate();
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::check_keys(t, "train",
                       {"batch_users", "max_steps", "lr", "beta1", "beta2", "eps", "eval_every",
                        "patience", "audit"});
    cfg.train.batch_users = t.value("batch_users", cfg.train.batch_users);
    cfg.train.max_steps = t.value("max_steps", cfg.train.max_steps);
    cfg.train.adam.lr = t.value("lr", cfg.train.adam.lr);
    cfg.train.adam.beta1 = t.value("beta1", cfg.train.adam.beta1);
    cfg.train.adam.beta2 = t.value("beta2", cfg.train.adam.beta2);
    cfg.train.adam.eps = t.value("eps", cfg.train.adam.eps);
    cfg.train.eval_every = std::min(t.value("eval_every", cfg.train.eval_every),
                                    cfg.train.max_steps);
    cfg.train.patience = t.value("patience", cfg.train.patience);
    cfg.train.audit = t.value("audit", cfg.train.audit);
    cfg.train.validate();
  }

  if (j.contains("split")) {
    const auto& s = j.at("split");
    detail::check_keys(s, "split",
                       {"mode", "n_folds", "fold", "validation_fraction", "pin_threshold",
                        "seed"});
    if (s.contains("mode")) cfg.split.mode = split_mode_from_string(s.at("mode"));
    cfg.split.n_folds = s.value("n_folds", cfg.split.n_folds);
    cfg.split.fold = s.value("fold", cfg.split.fold);
    cfg.split.validation_fraction = s.value("validation_fraction", cfg.split.validation_fraction);
    cfg.split.pin_threshold = s.value("pin_threshold", cfg.split.pin_threshold);
    cfg.split.seed = s.value("seed", cfg.split.seed);
    require(cfg.split.fold >= 0 && cfg.split.fold < cfg.split.n_folds,
            "config: split.fold must lie in [0, n_folds)");
  }

  cfg.output_dir = j.value("output_dir", "");
  cfg.seed = j.value("seed", cfg.seed);
  cfg.train.seed = cfg.seed;
  return cfg;
}

inline RunConfig load_run_config(const std::string& path,
                                 const nlohmann::ordered_json& overrides = {}) {
  std::ifstream in(path);
  require(in.good(), "cannot open config: ", path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    fail("config ", path, ": ", e.what());
  }
  if (!overrides.is_null() && !overrides.empty()) j.merge_patch(overrides);
  return parse_run_config(j);
}

inline std::string config_hash(const nlohmann::ordered_json& effective) {
  return hex64(fnv1a(effective.dump()));
}

inline std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file for hashing: ", path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a(content));
}

// Every command drops one of these next to its outputs; with the config, the
// input hashes, and the seed the run can be reproduced exactly. No
// timestamps, so reruns stay byte-identical.
inline void write_run_manifest(const std::string& dir, const std::string& command,
                               const nlohmann::ordered_json& effective,
                               const std::vector<std::string>& input_paths, std::uint64_t seed) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["code_version"] = kVersion;
  m["config_hash"] = config_hash(effective);
  m["config"] = effective;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const std::string& p : input_paths) inputs[p] = file_hash(p);
  m["inputs"] = inputs;
  m["seed"] = seed;
  std::ofstream out(dir + "/run_manifest.json", std::ios::binary);
  require(out.good(), "cannot write run manifest in ", dir);
  out << m.dump(2) << "\n";
}

}  // namespace rhcnn
