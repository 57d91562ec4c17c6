#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rhcnn/archive.hpp"
#include "rhcnn/evaluator.hpp"
#include "rhcnn/reports.hpp"
#include "rhcnn/trainer.hpp"

namespace rhcnn {

struct GridDataset {
  std::string name;
  std::map<int, std::string> corpus_by_length;  // max_length -> archive dir
};

struct GridSpec {
  std::vector<GridDataset> datasets;
  std::vector<EncoderKind> encoders = {EncoderKind::rhcnn, EncoderKind::gru_baseline,
                                       EncoderKind::embed_baseline};
  std::vector<int> lengths = {200, 400};
  std::vector<SplitMode> modes = {SplitMode::warm, SplitMode::cold};
  int folds_to_run = 1;
  int n_folds = 5;
  double validation_fraction = 0.05;
  int pin_threshold = 5;
  EncoderConfig encoder_base;  // dimensions/dropout; kind set per cell
  MultiTaskConfig multitask;
  TrainConfig train;
  std::uint64_t seed = 42;
};

struct GridRow {
  std::string dataset;
  std::string encoder;
  int length = 0;
  std::string mode;
  double recall_at_50 = std::nan("");
  double tag_recall_at_50 = std::nan("");  // cold cells only
  std::string error;                       // nonempty when the cell failed
};

struct GridResult {
  std::vector<GridRow> rows;
};

inline std::string format_grid_table(const GridResult& result) {
  std::string out = "dataset,encoder,length,mode,recall_at_50,tag_recall_at_50,error\n";
  for (const auto& r : result.rows) {
    out += r.dataset + "," + r.encoder + "," + std::to_string(r.length) + "," + r.mode + ",";
    out += std::isnan(r.recall_at_50) ? "" : detail::fmt_double(r.recall_at_50);
    out += ",";
    out += std::isnan(r.tag_recall_at_50) ? "" : detail::fmt_double(r.tag_recall_at_50);
    out += "," + r.error + "\n";
  }
  return out;
}

// Full comparison grid: encoder x length x mode x dataset, mirroring the
// embedding baseline's exclusion from long-text cells (order-invariant, so
// longer input adds nothing). Cell failures are recorded and the grid moves
// on.
inline GridResult run_grid(const GridSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir + "/curves");
  GridResult result;

  for (const auto& ds : spec.datasets) {
    for (int length : spec.lengths) {
      for (EncoderKind kind : spec.encoders) {
        if (kind == EncoderKind::embed_baseline && length > 200) continue;
        for (SplitMode mode : spec.modes) {
          GridRow row;
          row.dataset = ds.name;
          row.encoder = to_string(kind);
          row.length = length;
          row.mode = to_string(mode);
          try {
            const auto it = ds.corpus_by_length.find(length);
            require(it != ds.corpus_by_length.end(), "grid: dataset '", ds.name,
                    "' has no corpus for length ", length);
            const CorpusBundle bundle = read_corpus_archive(it->second);

            EncoderConfig enc = spec.encoder_base;
            enc.kind = kind;
            enc.vocab_size = bundle.corpus.vocab.size();
            if (kind == EncoderKind::embed_baseline) enc.output_dim = enc.embedding_dim;
            if (kind == EncoderKind::gru_baseline) enc.output_dim = enc.stage2_dim;

            const SplitPlan plan = make_split(bundle.interactions, mode, spec.n_folds, spec.seed,
                                              spec.validation_fraction, spec.pin_threshold);
            double recall_sum = 0.0, tag_sum = 0.0;
            int folds = 0;
            for (int fold = 0; fold < spec.folds_to_run; ++fold) {
              const FoldData fd = realize_fold(plan, bundle.interactions, fold);
              Model model = init_model(enc, spec.multitask, bundle.interactions.n_users,
                                       bundle.interactions.n_items, bundle.tags.n_tags,
                                       mix_seed(spec.seed, fold));
              TrainConfig train = spec.train;
              train.seed = mix_seed(spec.seed, 1000 + fold);
              FitResult fit_result = fit(std::move(model), bundle.corpus, bundle.tags,
                                         bundle.interactions, fd, train);

              const RecallCurve curve =
                  evaluate_fold(fit_result.best, bundle.corpus, fd, default_m_values());
              const std::string stem = ds.name + "_" + to_string(kind) + "_" +
                                       std::to_string(length) + "_" + to_string(mode) + "_fold" +
                                       std::to_string(fold);
              write_recall_curve_csv(curve, out_dir + "/curves/" + stem + ".csv");
              for (std::size_t s = 0; s < curve.m_values.size(); ++s) {
                if (curve.m_values[s] == 50) recall_sum += curve.mean_recall[s];
              }
              if (mode == SplitMode::cold) {
                tag_sum += evaluate_tags(fit_result.best, bundle.corpus, bundle.tags,
                                         fd.test_items);
              }
              ++folds;
            }
            row.recall_at_50 = recall_sum / folds;
            if (mode == SplitMode::cold) row.tag_recall_at_50 = tag_sum / folds;
          } catch (const std::exception& e) {
            row.error = e.what();
          }
          result.rows.push_back(row);
        }
      }
    }
  }

  std::ofstream out(out_dir + "/results.csv", std::ios::binary);
  require(out.good(), "cannot write grid results in ", out_dir);
  out << format_grid_table(result);
  return result;
}

}  // namespace rhcnn
