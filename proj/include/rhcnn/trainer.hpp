#pragma once

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "rhcnn/adam.hpp"
#include "rhcnn/common.hpp"
#include "rhcnn/evaluator.hpp"
#include "rhcnn/interactions.hpp"
#include "rhcnn/model.hpp"
#include "rhcnn/rng.hpp"
#include "rhcnn/tags.hpp"
#include "rhcnn/text.hpp"

namespace rhcnn {

struct TrainConfig {
  int batch_users = 512;
  int max_steps = 20000;
  AdamConfig adam;
  int eval_every = 500;
  int patience = 5;
  std::uint64_t seed = 42;
  bool audit = false;

  void validate() const {
    require(batch_users >= 1, "train config: batch_users must be >= 1");
    require(max_steps >= 1, "train config: max_steps must be >= 1");
    require(eval_every >= 1 && eval_every <= max_steps,
            "train config: eval_every must lie in [1, max_steps]");
    require(patience >= 1, "train config: patience must be >= 1");
    require(adam.lr >= 0.0, "train config: learning rate must be >= 0");
  }
};

struct SampledPair {
  int user, pos, neg;
};

// Record of everything training touched, for leakage audits.
struct TrainAudit {
  std::set<std::pair<int, int>> rating_pairs;  // every (user, item) slot in a batch
  std::set<int> encoded_items;
};

// Users sampled uniformly with replacement from those with a nonempty
// training library; per user one positive uniform from the training
// positives and one negative uniform from items outside the user's full
// library, so held-out positives are never drawn as negatives.
inline std::vector<SampledPair> sample_batch(const InteractionMatrix& interactions,
                                             const std::vector<std::vector<int>>& train_pos,
                                             const std::vector<int>& eligible_users,
                                             int batch_users, Rng& rng) {
  require(!eligible_users.empty(), "sample_batch: no user has training positives");
  std::vector<SampledPair> batch;
  batch.reserve(batch_users);
  for (int b = 0; b < batch_users; ++b) {
    const int u = eligible_users[rng.uniform_int(0, static_cast<int>(eligible_users.size()))];
    const auto& pos = train_pos[u];
    const int p = pos[rng.uniform_int(0, static_cast<int>(pos.size()))];
    require(static_cast<int>(interactions.positives[u].size()) < interactions.n_items,
            "sample_batch: user ", u, " has every item in their library");
    int n = rng.uniform_int(0, interactions.n_items);
    while (interactions.has(u, n)) n = rng.uniform_int(0, interactions.n_items);
    batch.push_back({u, p, n});
  }
  return batch;
}

inline std::vector<int> users_with_training_positives(
    const std::vector<std::vector<int>>& train_pos) {
  std::vector<int> eligible;
  for (std::size_t u = 0; u < train_pos.size(); ++u) {
    if (!train_pos[u].empty()) eligible.push_back(static_cast<int>(u));
  }
  return eligible;
}

struct StepStats {
  double combined = 0.0, rating = 0.0, tag = 0.0;
};

// One optimization step: encodes each distinct batch item once, computes the
// combined cost over 2 * batch_users rating pairs plus the batch items' tag
// pairs, and applies an Adam update to every parameter.
//
// Traces are not kept across documents; the backward pass replays each
// forward with the same per-document dropout stream, derived from step_seed
// and the item index.
inline StepStats train_step(Model& model, const std::vector<SampledPair>& batch,
                            const DocumentCorpus& corpus, const TagMatrix& tags,
                            AdamState& adam, const TrainConfig& cfg, std::uint64_t step_seed,
                            Rng& rng, TrainAudit* audit = nullptr) {
  require(!batch.empty(), "train_step: empty batch");
  const double lambda = model.multitask.lambda;

  // Distinct items, ascending, each encoded once.
  std::vector<int> items;
  items.reserve(batch.size() * 2);
  for (const auto& s : batch) {
    items.push_back(s.pos);
    items.push_back(s.neg);
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  std::vector<int> slot_of(corpus.n_items(), -1);
  for (std::size_t k = 0; k < items.size(); ++k) slot_of[items[k]] = static_cast<int>(k);

  std::vector<Vec> g(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    Rng doc_rng(mix_seed(step_seed, static_cast<std::uint64_t>(items[k])));
    g[k] = encode_forward(corpus.sequences[items[k]], model.encoder, model.encoder_config,
                          /*training=*/true, &doc_rng)
               .out;
  }

  std::vector<RatingExample> rating_batch;
  rating_batch.reserve(batch.size() * 2);
  for (const auto& s : batch) {
    rating_batch.push_back({s.user, s.pos, slot_of[s.pos], 1.0});
    rating_batch.push_back({s.user, s.neg, slot_of[s.neg], 0.0});
  }

  std::vector<TagExample> tag_batch;
  for (int j : items) {
    const auto& pos_tags = tags.positives[j];
    for (int l : pos_tags) {
      tag_batch.push_back({j, slot_of[j], l, 1.0});
      if (static_cast<int>(pos_tags.size()) >= tags.n_tags) continue;  // nothing to sample
      for (int k = 0; k < model.multitask.tag_negatives_per_positive; ++k) {
        int neg = rng.uniform_int(0, tags.n_tags);
        while (tags.has(j, neg)) neg = rng.uniform_int(0, tags.n_tags);
        tag_batch.push_back({j, slot_of[j], neg, 0.0});
      }
    }
  }

  if (audit) {
    for (const auto& ex : rating_batch) audit->rating_pairs.emplace(ex.user, ex.item);
    for (int j : items) audit->encoded_items.insert(j);
  }

  LatentTables table_grads = zeros_like(model.tables);
  std::vector<Vec> dg(items.size(), Vec::Zero(model.tables.dim()));
  StepStats stats;
  stats.rating = rating_loss_backward(rating_batch, g, model.tables, model.multitask, lambda,
                                      table_grads, dg);
  stats.tag = tag_batch.empty()
                  ? 0.0
                  : tag_loss_backward(tag_batch, g, model.tables, 1.0 - lambda, table_grads, dg);
  stats.combined = multitask_loss(stats.rating, stats.tag, lambda);

  if (!std::isfinite(stats.combined)) {
    std::string ids;
    for (const auto& s : batch) {
      ids += " (" + std::to_string(s.user) + "," + std::to_string(s.pos) + "," +
             std::to_string(s.neg) + ")";
    }
    fail("train_step: non-finite loss; batch (user,pos,neg) ids:", ids);
  }

  EncoderParameters enc_grads = zeros_like(model.encoder);
  for (std::size_t k = 0; k < items.size(); ++k) {
    Rng doc_rng(mix_seed(step_seed, static_cast<std::uint64_t>(items[k])));
    const EncodeTrace tr = encode_forward(corpus.sequences[items[k]], model.encoder,
                                          model.encoder_config, /*training=*/true, &doc_rng);
    encode_backward(corpus.sequences[items[k]], tr, dg[k], model.encoder, model.encoder_config,
                    enc_grads);
  }
  for (const ParamRef& ref : param_refs(enc_grads)) {
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      require(std::isfinite(ref.data[i]), "train_step: non-finite gradient in block ", ref.name);
    }
  }

  std::vector<ParamRef> grad_refs = param_refs(enc_grads);
  for (ParamRef& r : param_refs(table_grads)) grad_refs.push_back(r);
  adam.update(model.refs(), grad_refs, cfg.adam);
  return stats;
}

struct StepRecord {
  int step;
  double combined, rating, tag;
};
struct EvalRecord {
  int step;
  double recall;
  bool improved;
};
struct TrainingLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
};

struct FitResult {
  Model best;
  int best_step = 0;
  double best_recall = -1.0;  // -1 when no validation pairs exist
  int steps_run = 0;
  bool early_stopped = false;
  TrainingLog log;
  TrainAudit audit;
};

// Early-stopping validation: held-out training positives ranked warm-style
// among the fold's training items only, so cold test documents stay
// untouched until final evaluation.
inline double validation_recall(const Model& model, const DocumentCorpus& corpus,
                                const FoldData& fd, int m = 50) {
  FoldData vfd;
  vfd.fold = fd.fold;
  vfd.mode = SplitMode::warm;
  vfd.train_items = fd.train_items;
  vfd.train_pos = fd.train_pos;
  vfd.val_pos.assign(fd.train_pos.size(), {});
  vfd.test_pos = fd.val_pos;
  return evaluate_fold(model, corpus, vfd, {m}).mean_recall[0];
}

// Full training run with periodic validation and patience-based stopping;
// returns the parameters at the best validation recall seen.
inline FitResult fit(Model model, const DocumentCorpus& corpus, const TagMatrix& tags,
                     const InteractionMatrix& interactions, const FoldData& fd,
                     const TrainConfig& cfg) {
  cfg.validate();
  model.encoder_config.validate();
  model.multitask.validate();

  const std::vector<int> eligible = users_with_training_positives(fd.train_pos);
  require(!eligible.empty(), "fit: no user has training positives");
  bool has_validation = false;
  for (const auto& v : fd.val_pos) {
    if (!v.empty()) {
      has_validation = true;
      break;
    }
  }

  FitResult result;
  Rng rng(cfg.seed);
  AdamState adam;
  adam.init(model.refs());

  int evals_since_best = 0;
  bool have_best = false;
  for (int step = 1; step <= cfg.max_steps; ++step) {
    const auto batch =
        sample_batch(interactions, fd.train_pos, eligible, cfg.batch_users, rng);
    const std::uint64_t step_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(step));
    const StepStats stats = train_step(model, batch, corpus, tags, adam, cfg, step_seed, rng,
                                       cfg.audit ? &result.audit : nullptr);
    result.log.steps.push_back({step, stats.combined, stats.rating, stats.tag});
    result.steps_run = step;

    if (has_validation && step % cfg.eval_every == 0) {
      const double recall = validation_recall(model, corpus, fd);
      const bool improved = !have_best || recall > result.best_recall;
      result.log.evals.push_back({step, recall, improved});
      if (improved) {
        result.best = model;
        result.best_recall = recall;
        result.best_step = step;
        have_best = true;
        evals_since_best = 0;
      } else if (++evals_since_best >= cfg.patience) {
        result.early_stopped = true;
        break;
      }
    }
  }

  if (!have_best) {
    result.best = std::move(model);
    result.best_step = result.steps_run;
  }
  return result;
}

// Leakage audit: no held-out pair may have entered a training batch, and in
// cold mode no held-out item's document may have been encoded.
inline void verify_no_leakage(const TrainAudit& audit, const FoldData& fd) {
  for (std::size_t u = 0; u < fd.test_pos.size(); ++u) {
    for (int j : fd.test_pos[u]) {
      require(audit.rating_pairs.count({static_cast<int>(u), j}) == 0,
              "leakage: test pair (", u, ",", j, ") appeared in a training batch");
    }
  }
  if (fd.mode == SplitMode::cold) {
    for (int j : fd.test_items) {
      require(audit.encoded_items.count(j) == 0, "leakage: cold test item ", j,
              " was encoded during training");
      for (const auto& [user, item] : audit.rating_pairs) {
        require(item != j, "leakage: cold test item ", j, " appeared in a training batch");
      }
    }
  }
}

}  // namespace rhcnn
