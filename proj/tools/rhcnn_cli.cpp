// Command-line front end: preprocess, split, train, evaluate, recommend,
// predict-tags, grid, export-curves. Every command validates its inputs up
// front, writes a reproducibility manifest next to its outputs, and reports
// failures as a machine-readable record on stderr with a nonzero exit code.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rhcnn/archive.hpp"
#include "rhcnn/checkpoint.hpp"
#include "rhcnn/grid.hpp"
#include "rhcnn/reports.hpp"
#include "rhcnn/run_config.hpp"
#include "rhcnn/split_io.hpp"
#include "rhcnn/trainer.hpp"

namespace fs = std::filesystem;
using rhcnn::json;

namespace {

// Single environment override: relative output paths land under this root.
std::string resolve_output(const std::string& path) {
  const char* root = std::getenv("RHCNN_OUTPUT_ROOT");
  if (root != nullptr && *root != '\0' && !path.empty() && !fs::path(path).is_absolute()) {
    return (fs::path(root) / path).string();
  }
  return path;
}

struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_steps, batch_users, max_length, fold;
  std::optional<double> lambda, lr;
  std::optional<std::string> encoder, mode, output_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file")->required();
    cmd->add_option("--seed", seed, "override config seed");
    cmd->add_option("--max-steps", max_steps, "override train.max_steps");
    cmd->add_option("--batch-users", batch_users, "override train.batch_users");
    cmd->add_option("--max-length", max_length, "override corpus.max_length");
    cmd->add_option("--fold", fold, "override split.fold");
    cmd->add_option("--lambda", lambda, "override multitask.lambda");
    cmd->add_option("--lr", lr, "override train.lr");
    cmd->add_option("--encoder", encoder, "override encoder.kind");
    cmd->add_option("--mode", mode, "override split.mode");
    cmd->add_option("--output-dir", output_dir, "override output_dir");
  }

  rhcnn::RunConfig load() const {
    json patch = json::object();
    if (seed) patch["seed"] = *seed;
    if (max_steps) patch["train"]["max_steps"] = *max_steps;
    if (batch_users) patch["train"]["batch_users"] = *batch_users;
    if (max_length) patch["corpus"]["max_length"] = *max_length;
    if (fold) patch["split"]["fold"] = *fold;
    if (lambda) patch["multitask"]["lambda"] = *lambda;
    if (lr) patch["train"]["lr"] = *lr;
    if (encoder) patch["encoder"]["kind"] = *encoder;
    if (mode) patch["split"]["mode"] = *mode;
    if (output_dir) patch["output_dir"] = *output_dir;
    return rhcnn::load_run_config(config_path, patch);
  }
};

void check_vocab_hash(const rhcnn::LoadedCheckpoint& ck, const rhcnn::CorpusBundle& bundle) {
  const std::string h = rhcnn::vocabulary_hash(bundle.corpus.vocab);
  rhcnn::require(ck.meta.vocab_hash == h, "checkpoint was trained against vocabulary ",
                 ck.meta.vocab_hash, " but this corpus hashes to ", h,
                 "; refusing to evaluate across corpora");
}

int cmd_preprocess(const ConfigFlags& flags) {
  const rhcnn::RunConfig cfg = flags.load();
  rhcnn::require(!cfg.dataset.items_csv.empty(), "config: dataset.items_csv is required");
  rhcnn::require(!cfg.dataset.users_dat.empty(), "config: dataset.users_dat is required");
  rhcnn::require(!cfg.dataset.tags_dat.empty(), "config: dataset.tags_dat is required");
  rhcnn::require(!cfg.dataset.tag_vocab_txt.empty(), "config: dataset.tag_vocab_txt is required");
  rhcnn::require(!cfg.output_dir.empty(), "config: output_dir is required");
  for (const std::string& p :
       {cfg.dataset.items_csv, cfg.dataset.users_dat, cfg.dataset.tags_dat,
        cfg.dataset.tag_vocab_txt}) {
    rhcnn::require(fs::exists(p), "missing input file: ", p);
  }
  if (!cfg.dataset.citations_dat.empty()) {
    rhcnn::require(fs::exists(cfg.dataset.citations_dat), "missing input file: ",
                   cfg.dataset.citations_dat);
  }

  const rhcnn::RawDataset raw = rhcnn::parse_raw(cfg.dataset, cfg.format);
  const rhcnn::CorpusBundle bundle = rhcnn::build_corpus(raw, cfg.corpus);

  const std::string out = resolve_output(cfg.output_dir);
  rhcnn::write_corpus_archive(bundle, out);
  std::vector<std::string> inputs = {cfg.dataset.items_csv, cfg.dataset.users_dat,
                                     cfg.dataset.tags_dat, cfg.dataset.tag_vocab_txt};
  if (!cfg.dataset.citations_dat.empty()) inputs.push_back(cfg.dataset.citations_dat);
  rhcnn::write_run_manifest(out, "preprocess", cfg.effective, inputs, cfg.seed);

  std::cout << "corpus written to " << out << "\n"
            << "  users        " << bundle.interactions.n_users << "\n"
            << "  items        " << bundle.corpus.n_items() << "\n"
            << "  interactions " << bundle.interactions.interaction_count() << "\n"
            << "  tags         " << bundle.tags.n_tags << "\n"
            << "  vocabulary   " << bundle.corpus.vocab.size() << "\n"
            << "  density      " << rhcnn::detail::fmt_double(bundle.interactions.density(), 6)
            << "\n"
            << "  dropped      " << bundle.dropped_external_ids.size() << " empty-text items\n";
  return 0;
}

int cmd_split(const std::string& corpus_dir, const std::string& mode, int n_folds,
              std::uint64_t seed, double validation_fraction, int pin_threshold,
              const std::string& out_file) {
  const rhcnn::CorpusBundle bundle = rhcnn::read_corpus_archive(corpus_dir);
  const rhcnn::SplitPlan plan =
      rhcnn::make_split(bundle.interactions, rhcnn::split_mode_from_string(mode), n_folds, seed,
                        validation_fraction, pin_threshold);
  rhcnn::verify_split(plan, bundle.interactions);
  const std::string out = resolve_output(out_file);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  rhcnn::write_split_plan(plan, out);
  std::cout << "split plan (" << mode << ", " << n_folds << " folds) written to " << out << "\n";
  return 0;
}

int cmd_train(const ConfigFlags& flags, const std::string& corpus_dir,
              const std::string& split_file) {
  const rhcnn::RunConfig cfg = flags.load();
  rhcnn::require(!cfg.output_dir.empty(), "config: output_dir is required");
  const rhcnn::CorpusBundle bundle = rhcnn::read_corpus_archive(corpus_dir);
  const rhcnn::SplitPlan plan = rhcnn::read_split_plan(split_file);
  const rhcnn::FoldData fd = rhcnn::realize_fold(plan, bundle.interactions, cfg.split.fold);

  rhcnn::EncoderConfig enc = cfg.encoder;
  enc.vocab_size = bundle.corpus.vocab.size();
  enc.validate();

  rhcnn::Model model =
      rhcnn::init_model(enc, cfg.multitask, bundle.interactions.n_users,
                        bundle.interactions.n_items, bundle.tags.n_tags, cfg.seed);
  rhcnn::FitResult result =
      rhcnn::fit(std::move(model), bundle.corpus, bundle.tags, bundle.interactions, fd, cfg.train);

  const std::string out = resolve_output(cfg.output_dir);
  fs::create_directories(out);

  rhcnn::CheckpointMeta meta;
  meta.vocab_hash = rhcnn::vocabulary_hash(bundle.corpus.vocab);
  meta.n_users = bundle.interactions.n_users;
  meta.n_items = bundle.interactions.n_items;
  meta.n_tags = bundle.tags.n_tags;
  meta.step = result.best_step;
  meta.validation_recall = result.best_recall;
  rhcnn::save_checkpoint(out + "/checkpoint.bin", result.best, meta);

  {
    std::ofstream log(out + "/train_log.csv", std::ios::binary);
    log << "step,loss,rating_loss,tag_loss\n";
    for (const auto& s : result.log.steps) {
      log << s.step << "," << rhcnn::detail::fmt_double(s.combined) << ","
          << rhcnn::detail::fmt_double(s.rating) << "," << rhcnn::detail::fmt_double(s.tag)
          << "\n";
    }
    std::ofstream evals(out + "/eval_log.csv", std::ios::binary);
    evals << "step,validation_recall_at_50,improved\n";
    for (const auto& e : result.log.evals) {
      evals << e.step << "," << rhcnn::detail::fmt_double(e.recall) << ","
            << (e.improved ? 1 : 0) << "\n";
    }
  }
  rhcnn::write_run_manifest(out, "train", cfg.effective, {split_file}, cfg.seed);

  std::cout << "trained " << result.steps_run << " steps ("
            << (result.early_stopped ? "early stop" : "max steps") << ")\n"
            << "best step " << result.best_step << ", validation recall@50 "
            << rhcnn::detail::fmt_double(result.best_recall, 4) << "\n"
            << "checkpoint " << out << "/checkpoint.bin\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& corpus_dir,
                 const std::string& split_file, int fold, const std::string& out_dir) {
  const rhcnn::CorpusBundle bundle = rhcnn::read_corpus_archive(corpus_dir);
  const rhcnn::LoadedCheckpoint ck = rhcnn::load_checkpoint(checkpoint_path);
  check_vocab_hash(ck, bundle);
  const rhcnn::SplitPlan plan = rhcnn::read_split_plan(split_file);
  const rhcnn::FoldData fd = rhcnn::realize_fold(plan, bundle.interactions, fold);

  const rhcnn::RecallCurve curve =
      rhcnn::evaluate_fold(ck.model, bundle.corpus, fd, rhcnn::default_m_values());

  const std::string out = resolve_output(out_dir);
  fs::create_directories(out);
  rhcnn::write_recall_curve_csv(curve, out + "/recall_curve.csv");
  rhcnn::write_per_user_recall_csv(curve, out + "/per_user_recall.csv");

  double recall_50 = 0.0;
  for (std::size_t s = 0; s < curve.m_values.size(); ++s) {
    if (curve.m_values[s] == 50) recall_50 = curve.mean_recall[s];
  }
  json summary;
  summary["mode"] = rhcnn::to_string(plan.mode);
  summary["fold"] = fold;
  summary["n_users"] = curve.n_users;
  summary["recall_at_50"] = recall_50;
  if (plan.mode == rhcnn::SplitMode::cold) {
    summary["tag_recall_at_50"] =
        rhcnn::evaluate_tags(ck.model, bundle.corpus, bundle.tags, fd.test_items);
  }
  {
    std::ofstream sf(out + "/summary.json", std::ios::binary);
    sf << summary.dump(2) << "\n";
  }
  rhcnn::write_run_manifest(out, "evaluate", json{{"checkpoint", checkpoint_path},
                                                  {"corpus", corpus_dir},
                                                  {"split", split_file},
                                                  {"fold", fold}},
                            {checkpoint_path, split_file}, 0);
  std::cout << rhcnn::to_string(plan.mode) << " fold " << fold << ": Recall@50 = "
            << rhcnn::detail::fmt_double(recall_50, 4) << " over " << curve.n_users
            << " users\n";
  return 0;
}

int cmd_recommend(const std::string& checkpoint_path, const std::string& corpus_dir, int user,
                  int n, const std::string& split_file, int fold) {
  const rhcnn::CorpusBundle bundle = rhcnn::read_corpus_archive(corpus_dir);
  const rhcnn::LoadedCheckpoint ck = rhcnn::load_checkpoint(checkpoint_path);
  check_vocab_hash(ck, bundle);
  rhcnn::require(user >= 0 && user < bundle.interactions.n_users, "unknown user ", user,
                 "; valid range is [0, ", bundle.interactions.n_users, ")");

  // Excluded items: the user's training positives when a split is given,
  // otherwise their whole library.
  std::vector<int> exclude;
  if (!split_file.empty()) {
    const rhcnn::SplitPlan plan = rhcnn::read_split_plan(split_file);
    const rhcnn::FoldData fd = rhcnn::realize_fold(plan, bundle.interactions, fold);
    exclude = fd.train_pos[user];
    exclude.insert(exclude.end(), fd.val_pos[user].begin(), fd.val_pos[user].end());
    std::sort(exclude.begin(), exclude.end());
  } else {
    exclude = bundle.interactions.positives[user];
  }

  std::vector<int> candidates(bundle.interactions.n_items);
  std::iota(candidates.begin(), candidates.end(), 0);
  const std::vector<rhcnn::Vec> g = rhcnn::encode_items(ck.model, bundle.corpus, candidates);
  std::vector<double> scores(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    scores[k] = rhcnn::predict_rating(user, candidates[k], g[k], ck.model.tables);
  }
  const std::vector<int> top = rhcnn::recommend_top_n(candidates, scores, n, exclude);

  std::cout << "rank,item,external_id,title,score\n";
  for (std::size_t r = 0; r < top.size(); ++r) {
    const int j = top[r];
    std::cout << r + 1 << "," << j << "," << rhcnn::detail::csv_escape(bundle.item_external_ids[j])
              << "," << rhcnn::detail::csv_escape(bundle.item_titles[j]) << ","
              << rhcnn::detail::fmt_double(scores[j], 6) << "\n";
  }
  return 0;
}

int cmd_predict_tags(const std::string& checkpoint_path, const std::string& corpus_dir,
                     const std::string& title, const std::string& abstract, int k) {
  const rhcnn::CorpusBundle bundle = rhcnn::read_corpus_archive(corpus_dir);
  const rhcnn::LoadedCheckpoint ck = rhcnn::load_checkpoint(checkpoint_path);
  check_vocab_hash(ck, bundle);

  const std::vector<std::string> tokens = rhcnn::tokenize(title, abstract);
  rhcnn::require(!tokens.empty(), "text tokenizes to nothing; cannot predict tags");
  const std::vector<std::int32_t> seq =
      rhcnn::encode_tokens(tokens, bundle.corpus.vocab, bundle.corpus.max_length);

  // New document: cold representation, no item offset.
  const rhcnn::Vec g = rhcnn::encode(seq, ck.model.encoder, ck.model.encoder_config);
  std::vector<int> tag_ids(ck.model.tables.n_tags());
  std::iota(tag_ids.begin(), tag_ids.end(), 0);
  std::vector<double> probs(tag_ids.size());
  for (int l = 0; l < ck.model.tables.n_tags(); ++l) {
    probs[l] = rhcnn::predict_tag_prob(g, l, ck.model.tables);
  }
  std::cout << "rank,tag,probability\n";
  if (k <= 0) return 0;
  const std::vector<int> top = rhcnn::recommend_top_n(tag_ids, probs, k);
  for (std::size_t r = 0; r < top.size(); ++r) {
    std::cout << r + 1 << "," << rhcnn::detail::csv_escape(bundle.tags.tag_vocab[top[r]]) << ","
              << rhcnn::detail::fmt_double(probs[top[r]], 6) << "\n";
  }
  return 0;
}

rhcnn::GridSpec parse_grid_spec(const json& j) {
  rhcnn::detail::check_keys(j, "grid config",
                            {"datasets", "encoders", "lengths", "modes", "folds_to_run",
                             "n_folds", "validation_fraction", "pin_threshold", "encoder",
                             "multitask", "train", "seed"});
  rhcnn::GridSpec spec;
  for (const auto& d : j.at("datasets")) {
    rhcnn::detail::check_keys(d, "grid dataset", {"name", "corpora"});
    rhcnn::GridDataset ds;
    ds.name = d.at("name").get<std::string>();
    for (const auto& [len, dir] : d.at("corpora").items()) {
      ds.corpus_by_length[std::stoi(len)] = dir.get<std::string>();
    }
    spec.datasets.push_back(ds);
  }
  if (j.contains("encoders")) {
    spec.encoders.clear();
    for (const auto& e : j.at("encoders")) {
      spec.encoders.push_back(rhcnn::encoder_kind_from_string(e.get<std::string>()));
    }
  }
  if (j.contains("lengths")) spec.lengths = j.at("lengths").get<std::vector<int>>();
  if (j.contains("modes")) {
    spec.modes.clear();
    for (const auto& m : j.at("modes")) {
      spec.modes.push_back(rhcnn::split_mode_from_string(m.get<std::string>()));
    }
  }
  spec.folds_to_run = j.value("folds_to_run", spec.folds_to_run);
  spec.n_folds = j.value("n_folds", spec.n_folds);
  spec.validation_fraction = j.value("validation_fraction", spec.validation_fraction);
  spec.pin_threshold = j.value("pin_threshold", spec.pin_threshold);
  spec.seed = j.value("seed", spec.seed);

  // Reuse the run-config parsing for the shared sections.
  json sub = json::object();
  if (j.contains("encoder")) sub["encoder"] = j.at("encoder");
  if (j.contains("multitask")) sub["multitask"] = j.at("multitask");
  if (j.contains("train")) sub["train"] = j.at("train");
  sub["seed"] = spec.seed;
  const rhcnn::RunConfig rc = rhcnn::parse_run_config(sub);
  spec.encoder_base = rc.encoder;
  spec.multitask = rc.multitask;
  spec.train = rc.train;
  return spec;
}

int cmd_grid(const std::string& config_path, const std::string& out_dir) {
  std::ifstream in(config_path);
  rhcnn::require(in.good(), "cannot open grid config: ", config_path);
  json j;
  in >> j;
  const rhcnn::GridSpec spec = parse_grid_spec(j);
  const std::string out = resolve_output(out_dir);
  fs::create_directories(out);
  const rhcnn::GridResult result = rhcnn::run_grid(spec, out);
  rhcnn::write_run_manifest(out, "grid", j, {config_path}, spec.seed);
  std::cout << rhcnn::format_grid_table(result);
  int failed = 0;
  for (const auto& r : result.rows) failed += r.error.empty() ? 0 : 1;
  if (failed > 0) std::cerr << failed << " grid cell(s) failed\n";
  return 0;
}

int cmd_export_curves(const std::vector<std::string>& inputs,
                      const std::vector<std::string>& labels, const std::string& out_dir,
                      bool svg) {
  rhcnn::require(!inputs.empty(), "export-curves: no input curves given");
  std::vector<rhcnn::CurveSeries> series;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string label =
        i < labels.size() ? labels[i] : fs::path(inputs[i]).stem().string();
    series.push_back(rhcnn::read_recall_curve_csv(inputs[i], label));
  }
  const std::string out = resolve_output(out_dir);
  fs::create_directories(out);

  std::string csv = "M";
  for (const auto& s : series) csv += "," + s.label;
  csv += "\n";
  for (std::size_t row = 0; row < series[0].m_values.size(); ++row) {
    csv += std::to_string(series[0].m_values[row]);
    for (const auto& s : series) {
      csv += "," + (row < s.recall.size() ? rhcnn::detail::fmt_double(s.recall[row]) : "");
    }
    csv += "\n";
  }
  {
    std::ofstream f(out + "/curves.csv", std::ios::binary);
    f << csv;
  }
  if (svg) {
    std::ofstream f(out + "/curves.svg", std::ios::binary);
    f << rhcnn::render_curves_svg(series);
  }
  std::cout << "wrote " << out << "/curves.csv" << (svg ? " and curves.svg" : "") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid text-aware recommender for scientific articles"};
  app.require_subcommand(1);

  ConfigFlags pre_flags;
  auto* pre = app.add_subcommand("preprocess", "build a corpus archive from raw data");
  pre_flags.attach(pre);

  std::string sp_corpus, sp_mode = "warm", sp_out = "split.json";
  int sp_folds = 5, sp_pin = 5;
  std::uint64_t sp_seed = 7;
  double sp_val = 0.05;
  auto* sp = app.add_subcommand("split", "create a cross-validation split plan");
  sp->add_option("--corpus", sp_corpus, "corpus archive directory")->required();
  sp->add_option("--mode", sp_mode, "warm or cold");
  sp->add_option("--n-folds", sp_folds, "number of folds");
  sp->add_option("--seed", sp_seed, "split seed");
  sp->add_option("--validation-fraction", sp_val, "held-out share of training positives");
  sp->add_option("--pin-threshold", sp_pin, "items below this like count stay in training");
  sp->add_option("--out", sp_out, "output plan file")->required();

  ConfigFlags train_flags;
  std::string tr_corpus, tr_split;
  auto* tr = app.add_subcommand("train", "train a model on one fold");
  train_flags.attach(tr);
  tr->add_option("--corpus", tr_corpus, "corpus archive directory")->required();
  tr->add_option("--split", tr_split, "split plan file")->required();

  std::string ev_ck, ev_corpus, ev_split, ev_out = "eval";
  int ev_fold = 0;
  auto* ev = app.add_subcommand("evaluate", "recall curve for a checkpoint on one fold");
  ev->add_option("--checkpoint", ev_ck)->required();
  ev->add_option("--corpus", ev_corpus)->required();
  ev->add_option("--split", ev_split)->required();
  ev->add_option("--fold", ev_fold);
  ev->add_option("--out", ev_out);

  std::string rc_ck, rc_corpus, rc_split;
  int rc_user = 0, rc_n = 10, rc_fold = 0;
  auto* rc = app.add_subcommand("recommend", "top-N unseen items for a user");
  rc->add_option("--checkpoint", rc_ck)->required();
  rc->add_option("--corpus", rc_corpus)->required();
  rc->add_option("--user", rc_user)->required();
  rc->add_option("--n", rc_n);
  rc->add_option("--split", rc_split, "exclude only this split's training positives");
  rc->add_option("--fold", rc_fold);

  std::string pt_ck, pt_corpus, pt_title, pt_abstract;
  int pt_k = 10;
  auto* pt = app.add_subcommand("predict-tags", "tags for a new document (cold path)");
  pt->add_option("--checkpoint", pt_ck)->required();
  pt->add_option("--corpus", pt_corpus)->required();
  pt->add_option("--title", pt_title);
  pt->add_option("--abstract", pt_abstract);
  pt->add_option("--k", pt_k);

  std::string gr_config, gr_out = "grid";
  auto* gr = app.add_subcommand("grid", "full encoder x length x mode comparison");
  gr->add_option("--config", gr_config)->required();
  gr->add_option("--out", gr_out);

  std::vector<std::string> xc_in, xc_labels;
  std::string xc_out = "curves";
  bool xc_svg = false;
  auto* xc = app.add_subcommand("export-curves", "merge recall curves, optionally render svg");
  xc->add_option("--in", xc_in, "curve csv files")->required();
  xc->add_option("--labels", xc_labels, "series labels (default: file stems)");
  xc->add_option("--out", xc_out);
  xc->add_flag("--svg", xc_svg, "also render an svg plot");

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (pre->parsed()) return cmd_preprocess(pre_flags);
    if (sp->parsed()) {
      return cmd_split(sp_corpus, sp_mode, sp_folds, sp_seed, sp_val, sp_pin, sp_out);
    }
    if (tr->parsed()) return cmd_train(train_flags, tr_corpus, tr_split);
    if (ev->parsed()) return cmd_evaluate(ev_ck, ev_corpus, ev_split, ev_fold, ev_out);
    if (rc->parsed()) return cmd_recommend(rc_ck, rc_corpus, rc_user, rc_n, rc_split, rc_fold);
    if (pt->parsed()) return cmd_predict_tags(pt_ck, pt_corpus, pt_title, pt_abstract, pt_k);
    if (gr->parsed()) return cmd_grid(gr_config, gr_out);
    if (xc->parsed()) return cmd_export_curves(xc_in, xc_labels, xc_out, xc_svg);
  } catch (const std::exception& e) {
    const json record = {{"error", e.what()}, {"command", command}};
    std::cerr << record.dump() << "\n";
    return 1;
  }
  return 0;
}
