#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "rhcnn/common.hpp"
#include "rhcnn/interactions.hpp"
#include "rhcnn/model.hpp"
#include "rhcnn/rng.hpp"
#include "rhcnn/tags.hpp"
#include "rhcnn/text.hpp"

namespace rhcnn {

enum class SplitMode { warm, cold };

inline std::string to_string(SplitMode mode) {
  return mode == SplitMode::warm ? "warm" : "cold";
}

inline SplitMode split_mode_from_string(const std::string& s) {
  if (s == "warm") return SplitMode::warm;
  if (s == "cold") return SplitMode::cold;
  fail("unknown split mode: '", s, "' (expected warm or cold)");
}

// Cross-validation plan. Warm mode assigns each (user, positive) pair to a
// fold, pinning items below the like threshold to the training side of every
// fold; cold mode partitions the item set. A per-fold slice of each user's
// training positives is reserved for early-stopping validation.
struct SplitPlan {
  SplitMode mode = SplitMode::warm;
  int n_folds = 5;
  std::uint64_t seed = 0;
  int pin_threshold = 5;
  double validation_fraction = 0.05;

  std::vector<std::vector<int>> pair_fold;  // warm: parallel to positives[user]; -1 = pinned
  std::vector<int> item_fold;               // cold: per item
  std::vector<std::vector<std::vector<int>>> validation;  // [fold][user] -> sorted items
};

namespace detail {

inline std::vector<int> pick_validation(const std::vector<int>& train_items, double fraction,
                                        Rng& rng) {
  const int n = static_cast<int>(train_items.size());
  if (n < 2) return {};
  const int n_val = std::max(1, static_cast<int>(fraction * n));
  std::vector<int> pool = train_items;
  rng.shuffle(pool);
  pool.resize(n_val);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detail

inline SplitPlan make_split(const InteractionMatrix& interactions, SplitMode mode, int n_folds,
                            std::uint64_t seed, double validation_fraction = 0.05,
                            int pin_threshold = 5) {
  require(interactions.interaction_count() > 0, "make_split: no interactions");
  require(n_folds >= 2, "make_split: need at least 2 folds");
  SplitPlan plan;
  plan.mode = mode;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.pin_threshold = pin_threshold;
  plan.validation_fraction = validation_fraction;
  Rng rng(seed);

  if (mode == SplitMode::warm) {
    const std::vector<int> likes = interactions.likes_per_item();
    plan.pair_fold.resize(interactions.n_users);
    for (int u = 0; u < interactions.n_users; ++u) {
      const auto& pos = interactions.positives[u];
      plan.pair_fold[u].assign(pos.size(), -1);
      std::vector<int> eligible;
      for (std::size_t k = 0; k < pos.size(); ++k) {
        if (likes[pos[k]] >= pin_threshold) eligible.push_back(static_cast<int>(k));
      }
      rng.shuffle(eligible);
      for (std::size_t r = 0; r < eligible.size(); ++r) {
        plan.pair_fold[u][eligible[r]] = static_cast<int>(r % n_folds);
      }
    }
  } else {
    std::vector<int> order(interactions.n_items);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    plan.item_fold.assign(interactions.n_items, 0);
    for (std::size_t r = 0; r < order.size(); ++r) {
      plan.item_fold[order[r]] = static_cast<int>(r % n_folds);
    }
  }

  // Validation positives, held out of the training batches per fold.
  plan.validation.assign(n_folds, std::vector<std::vector<int>>(interactions.n_users));
  for (int f = 0; f < n_folds; ++f) {
    for (int u = 0; u < interactions.n_users; ++u) {
      std::vector<int> train_items;
      const auto& pos = interactions.positives[u];
      for (std::size_t k = 0; k < pos.size(); ++k) {
        const bool in_train = mode == SplitMode::warm ? plan.pair_fold[u][k] != f
                                                      : plan.item_fold[pos[k]] != f;
        if (in_train) train_items.push_back(pos[k]);
      }
      plan.validation[f][u] = detail::pick_validation(train_items, validation_fraction, rng);
    }
  }
  return plan;
}

// Materialized train/validation/test sides for one fold.
struct FoldData {
  int fold = 0;
  SplitMode mode = SplitMode::warm;
  std::vector<std::vector<int>> train_pos;  // per user, sorted; excludes validation
  std::vector<std::vector<int>> val_pos;
  std::vector<std::vector<int>> test_pos;
  std::vector<int> train_items;  // sorted
  std::vector<int> test_items;   // sorted; empty in warm mode
};

inline FoldData realize_fold(const SplitPlan& plan, const InteractionMatrix& interactions,
                             int fold) {
  require(fold >= 0 && fold < plan.n_folds, "realize_fold: fold ", fold, " out of range");
  FoldData fd;
  fd.fold = fold;
  fd.mode = plan.mode;
  fd.train_pos.resize(interactions.n_users);
  fd.val_pos.resize(interactions.n_users);
  fd.test_pos.resize(interactions.n_users);

  if (plan.mode == SplitMode::warm) {
    fd.train_items.resize(interactions.n_items);
    std::iota(fd.train_items.begin(), fd.train_items.end(), 0);
  } else {
    for (int j = 0; j < interactions.n_items; ++j) {
      (plan.item_fold[j] == fold ? fd.test_items : fd.train_items).push_back(j);
    }
  }

  for (int u = 0; u < interactions.n_users; ++u) {
    const auto& pos = interactions.positives[u];
    const auto& val = plan.validation[fold][u];
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const bool is_test = plan.mode == SplitMode::warm
                               ? plan.pair_fold[u][k] == fold
                               : plan.item_fold[pos[k]] == fold;
      if (is_test) {
        fd.test_pos[u].push_back(pos[k]);
      } else if (std::binary_search(val.begin(), val.end(), pos[k])) {
        fd.val_pos[u].push_back(pos[k]);
      } else {
        fd.train_pos[u].push_back(pos[k]);
      }
    }
  }
  return fd;
}

// Structural invariants of a plan against its interaction matrix; throws on
// the first violation.
inline void verify_split(const SplitPlan& plan, const InteractionMatrix& interactions) {
  if (plan.mode == SplitMode::warm) {
    const std::vector<int> likes = interactions.likes_per_item();
    for (int u = 0; u < interactions.n_users; ++u) {
      require(plan.pair_fold[u].size() == interactions.positives[u].size(),
              "split: pair_fold shape mismatch for user ", u);
      for (std::size_t k = 0; k < plan.pair_fold[u].size(); ++k) {
        const int f = plan.pair_fold[u][k];
        require(f >= -1 && f < plan.n_folds, "split: bad fold id");
        const int item = interactions.positives[u][k];
        require(f == -1 || likes[item] >= plan.pin_threshold, "split: item ", item, " with ",
                likes[item], " likes assigned to test fold ", f);
      }
    }
  } else {
    require(static_cast<int>(plan.item_fold.size()) == interactions.n_items,
            "split: item_fold shape mismatch");
    for (int j = 0; j < interactions.n_items; ++j) {
      require(plan.item_fold[j] >= 0 && plan.item_fold[j] < plan.n_folds, "split: bad fold id");
    }
  }
  for (int f = 0; f < plan.n_folds; ++f) {
    for (int u = 0; u < interactions.n_users; ++u) {
      for (int j : plan.validation[f][u]) {
        require(interactions.has(u, j), "split: validation pair (", u, ",", j, ") not a positive");
        const bool test_side =
            plan.mode == SplitMode::warm
                ? [&] {
                    const auto& pos = interactions.positives[u];
                    const auto it = std::lower_bound(pos.begin(), pos.end(), j);
                    return plan.pair_fold[u][it - pos.begin()] == f;
                  }()
                : plan.item_fold[j] == f;
        require(!test_side, "split: validation pair (", u, ",", j, ") lies in test fold ", f);
      }
    }
  }
}

// |top-M of ranked| intersected with test positives, over |test positives|.
inline double recall_at_m(const std::vector<int>& ranked, const std::vector<int>& test_positives,
                          int m) {
  require(!test_positives.empty(), "recall_at_m: empty test positives");
  std::vector<int> sorted_pos = test_positives;
  std::sort(sorted_pos.begin(), sorted_pos.end());
  const int top = std::min<int>(m, static_cast<int>(ranked.size()));
  int hits = 0;
  for (int k = 0; k < top; ++k) {
    if (std::binary_search(sorted_pos.begin(), sorted_pos.end(), ranked[k])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test_positives.size());
}

struct RecallCurve {
  std::vector<int> m_values;
  std::vector<double> mean_recall;  // per M, averaged over eligible users
  int n_users = 0;
  std::vector<int> user_ids;                  // eligible users, ascending
  std::vector<std::vector<double>> per_user;  // [user slot][M slot]
};

inline std::vector<int> default_m_values() {
  return {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
}

// Latent vectors for the given items, encoded deterministically.
inline std::vector<Vec> encode_items(const Model& model, const DocumentCorpus& corpus,
                                     const std::vector<int>& items) {
  std::vector<Vec> g(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    g[k] = encode(corpus.sequences[items[k]], model.encoder, model.encoder_config);
  }
  return g;
}

// Recall curve over one fold. Warm mode ranks every item the user has not
// trained on, with warm representations; cold mode ranks exactly the fold's
// test items, with cold representations, the same list for every user.
inline RecallCurve evaluate_fold(const Model& model, const DocumentCorpus& corpus,
                                 const FoldData& fd, const std::vector<int>& m_values) {
  require(!m_values.empty(), "evaluate_fold: no M values");
  const int n_users = static_cast<int>(fd.train_pos.size());
  const bool warm = fd.mode == SplitMode::warm;

  const std::vector<int>& candidates = warm ? fd.train_items : fd.test_items;
  const std::vector<Vec> g = encode_items(model, corpus, candidates);

  // Candidate representations: warm items carry their offset and bias.
  Mat f_mat(static_cast<Eigen::Index>(candidates.size()), model.tables.dim());
  Vec cand_bias = Vec::Zero(static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (warm) {
      f_mat.row(k) = (g[k] + model.tables.items.row(candidates[k]).transpose()).transpose();
      cand_bias(k) = model.tables.item_bias(candidates[k]);
    } else {
      f_mat.row(k) = g[k].transpose();
    }
  }

  RecallCurve curve;
  curve.m_values = m_values;
  curve.mean_recall.assign(m_values.size(), 0.0);
  const int max_m = *std::max_element(m_values.begin(), m_values.end());

  for (int u = 0; u < n_users; ++u) {
    if (fd.test_pos[u].empty()) continue;  // no denominator; skip, do not zero-count
    const Vec scores_vec =
        f_mat * model.tables.users.row(u).transpose() + cand_bias +
        Vec::Constant(f_mat.rows(), model.tables.user_bias(u));
    std::vector<double> scores(scores_vec.data(), scores_vec.data() + scores_vec.size());

    std::vector<int> exclude;
    if (warm) {
      exclude = fd.train_pos[u];
      exclude.insert(exclude.end(), fd.val_pos[u].begin(), fd.val_pos[u].end());
      std::sort(exclude.begin(), exclude.end());
    }
    const std::vector<int> ranked = recommend_top_n(candidates, scores, max_m, exclude);

    curve.user_ids.push_back(u);
    curve.per_user.emplace_back();
    for (std::size_t s = 0; s < m_values.size(); ++s) {
      const double r = recall_at_m(ranked, fd.test_pos[u], m_values[s]);
      curve.per_user.back().push_back(r);
      curve.mean_recall[s] += r;
    }
  }
  curve.n_users = static_cast<int>(curve.user_ids.size());
  require(curve.n_users > 0, "evaluate_fold: no user has test positives in this fold");
  for (double& r : curve.mean_recall) r /= static_cast<double>(curve.n_users);
  return curve;
}

// Mean tag Recall@m over cold items: every tag ranked by predicted
// probability against the item's true tags.
inline double evaluate_tags(const Model& model, const DocumentCorpus& corpus,
                            const TagMatrix& tags, const std::vector<int>& test_items,
                            int m = 50) {
  require(!test_items.empty(), "evaluate_tags: no test items");
  std::vector<int> tag_ids(model.tables.n_tags());
  std::iota(tag_ids.begin(), tag_ids.end(), 0);

  double total = 0.0;
  int counted = 0;
  for (int j : test_items) {
    if (tags.positives[j].empty()) continue;
    const Vec g = encode(corpus.sequences[j], model.encoder, model.encoder_config);
    const Vec probs_vec = model.tables.tags * g;  // monotone in the sigmoid argument
    std::vector<double> probs(probs_vec.data(), probs_vec.data() + probs_vec.size());
    const std::vector<int> ranked = recommend_top_n(tag_ids, probs, m);
    total += recall_at_m(ranked, tags.positives[j], m);
    ++counted;
  }
  require(counted > 0, "evaluate_tags: no test item has tags");
  return total / static_cast<double>(counted);
}

}  // namespace rhcnn
