#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "rhcnn/common.hpp"
#include "rhcnn/encoder.hpp"
#include "rhcnn/rng.hpp"

namespace rhcnn {

// User, item-offset, and tag embeddings plus the bias terms of the rating
// predictor. Rows live in the same latent space as the encoder output.
struct LatentTables {
  Mat users;  // n_users x p
  Mat items;  // n_items x p, the per-item offsets added to g(x)
  Mat tags;   // n_tags x p
  Vec user_bias;
  Vec item_bias;

  int n_users() const { return static_cast<int>(users.rows()); }
  int n_items() const { return static_cast<int>(items.rows()); }
  int n_tags() const { return static_cast<int>(tags.rows()); }
  int dim() const { return static_cast<int>(users.cols()); }
};

inline LatentTables init_tables(int n_users, int n_items, int n_tags, int dim, Rng& rng,
                                double scale = 0.05) {
  LatentTables t;
  const auto fill = [&](Mat& m, int rows) {
    m.resize(rows, dim);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-scale, scale);
    }
  };
  fill(t.users, n_users);
  fill(t.items, n_items);
  fill(t.tags, n_tags);
  t.user_bias = Vec::Zero(n_users);
  t.item_bias = Vec::Zero(n_items);
  return t;
}

inline LatentTables zeros_like(const LatentTables& t) {
  LatentTables z;
  z.users = Mat::Zero(t.users.rows(), t.users.cols());
  z.items = Mat::Zero(t.items.rows(), t.items.cols());
  z.tags = Mat::Zero(t.tags.rows(), t.tags.cols());
  z.user_bias = Vec::Zero(t.user_bias.rows());
  z.item_bias = Vec::Zero(t.item_bias.rows());
  return z;
}

inline std::vector<ParamRef> param_refs(LatentTables& t) {
  return {{"tables.users", t.users.data(), t.users.rows(), t.users.cols()},
          {"tables.items", t.items.data(), t.items.rows(), t.items.cols()},
          {"tables.tags", t.tags.data(), t.tags.rows(), t.tags.cols()},
          {"tables.user_bias", t.user_bias.data(), t.user_bias.rows(), 1},
          {"tables.item_bias", t.item_bias.data(), t.item_bias.rows(), 1}};
}

struct MultiTaskConfig {
  double lambda = 0.5;  // weight on the rating cost; 1 - lambda on tags
  double c_pos = 1.0;
  double c_neg = 1.0;
  int tag_negatives_per_positive = 1;

  void validate() const {
    require(lambda >= 0.0 && lambda <= 1.0, "multitask config: lambda must lie in [0, 1]");
    require(c_pos > 0.0 && c_neg > 0.0, "multitask config: confidence weights must be positive");
    require(tag_negatives_per_positive >= 0,
            "multitask config: tag_negatives_per_positive must be >= 0");
  }
};

inline constexpr int kColdItem = -1;  // item index for out-of-matrix documents

// F(x_j) = g(x) + v_j for known items; a new item has no offset, so F = g(x).
inline Vec item_representation(int item, const Vec& g_x, const LatentTables& t) {
  if (item == kColdItem) return g_x;
  require(item >= 0 && item < t.n_items(), "item_representation: item ", item, " out of range");
  return g_x + t.items.row(item).transpose();
}

// r_hat = bias_i + bias_j + u_i . F(x_j); cold items carry no learned bias.
inline double predict_rating(int user, int item, const Vec& g_x, const LatentTables& t) {
  require(user >= 0 && user < t.n_users(), "predict_rating: user ", user, " out of range");
  const Vec f = item_representation(item, g_x, t);
  double score = t.user_bias(user) + t.users.row(user).dot(f);
  if (item != kColdItem) score += t.item_bias(item);
  return score;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Probability of observing tag l on an item with representation f.
inline double predict_tag_prob(const Vec& item_repr, int tag, const LatentTables& t) {
  require(tag >= 0 && tag < t.n_tags(), "predict_tag_prob: tag ", tag, " out of range");
  return sigmoid(item_repr.dot(t.tags.row(tag).transpose()));
}

// One rating term: target r in {0,1}; doc indexes the batch's encoded
// documents; item == kColdItem for out-of-matrix predictions.
struct RatingExample {
  int user;
  int item;
  int doc;
  double target;
};

struct TagExample {
  int item;  // never cold during training
  int doc;
  int tag;
  double target;
};

// Weighted mean-square rating cost over a batch.
inline double rating_loss(const std::vector<RatingExample>& batch, const std::vector<Vec>& g,
                          const LatentTables& t, const MultiTaskConfig& cfg) {
  require(!batch.empty(), "rating_loss: empty batch");
  double sum = 0.0;
  for (const auto& ex : batch) {
    const double err = predict_rating(ex.user, ex.item, g[ex.doc], t) - ex.target;
    sum += (ex.target > 0.5 ? cfg.c_pos : cfg.c_neg) * err * err;
  }
  return sum / static_cast<double>(batch.size());
}

// Same cost with gradients: accumulates weight * dC_R into the table
// gradients and into dg (one slot per encoded document).
inline double rating_loss_backward(const std::vector<RatingExample>& batch,
                                   const std::vector<Vec>& g, const LatentTables& t,
                                   const MultiTaskConfig& cfg, double weight,
                                   LatentTables& grads, std::vector<Vec>& dg) {
  require(!batch.empty(), "rating_loss: empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  double sum = 0.0;
  for (const auto& ex : batch) {
    const Vec f = item_representation(ex.item, g[ex.doc], t);
    double score = t.user_bias(ex.user) + t.users.row(ex.user).dot(f);
    if (ex.item != kColdItem) score += t.item_bias(ex.item);
    const double c = ex.target > 0.5 ? cfg.c_pos : cfg.c_neg;
    const double err = score - ex.target;
    sum += c * err * err;

    const double d = weight * inv * 2.0 * c * err;
    grads.user_bias(ex.user) += d;
    grads.users.row(ex.user) += d * f.transpose();
    const Vec du = d * t.users.row(ex.user).transpose();
    dg[ex.doc] += du;
    if (ex.item != kColdItem) {
      grads.item_bias(ex.item) += d;
      grads.items.row(ex.item) += du.transpose();
    }
  }
  return sum * inv;
}

inline constexpr double kProbClamp = 1e-7;

// Binary cross-entropy over (item, tag) pairs, probabilities clamped away
// from 0 and 1.
inline double tag_loss(const std::vector<TagExample>& pairs, const std::vector<Vec>& g,
                       const LatentTables& t) {
  require(!pairs.empty(), "tag_loss: empty pair set");
  double sum = 0.0;
  for (const auto& ex : pairs) {
    const Vec f = item_representation(ex.item, g[ex.doc], t);
    const double p = std::clamp(sigmoid(f.dot(t.tags.row(ex.tag).transpose())), kProbClamp,
                                1.0 - kProbClamp);
    sum -= ex.target * std::log(p) + (1.0 - ex.target) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(pairs.size());
}

inline double tag_loss_backward(const std::vector<TagExample>& pairs, const std::vector<Vec>& g,
                                const LatentTables& t, double weight, LatentTables& grads,
                                std::vector<Vec>& dg) {
  require(!pairs.empty(), "tag_loss: empty pair set");
  const double inv = 1.0 / static_cast<double>(pairs.size());
  double sum = 0.0;
  for (const auto& ex : pairs) {
    const Vec f = item_representation(ex.item, g[ex.doc], t);
    const double raw = sigmoid(f.dot(t.tags.row(ex.tag).transpose()));
    const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
    sum -= ex.target * std::log(p) + (1.0 - ex.target) * std::log(1.0 - p);

    // d/da of the clamped cost is p - t inside the clamp and 0 outside.
    if (raw > kProbClamp && raw < 1.0 - kProbClamp) {
      const double d = weight * inv * (raw - ex.target);
      grads.tags.row(ex.tag) += d * f.transpose();
      const Vec df = d * t.tags.row(ex.tag).transpose();
      dg[ex.doc] += df;
      if (ex.item != kColdItem) grads.items.row(ex.item) += df.transpose();
    }
  }
  return sum * inv;
}

// C = lambda * C_R + (1 - lambda) * C_T.
inline double multitask_loss(double rating_cost, double tag_cost, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, "multitask_loss: lambda must lie in [0, 1]");
  return lambda * rating_cost + (1.0 - lambda) * tag_cost;
}

// Items sorted by score descending, ties broken by ascending item index,
// excluded items skipped, first n returned.
inline std::vector<int> recommend_top_n(const std::vector<int>& candidates,
                                        const std::vector<double>& scores, int n,
                                        const std::vector<int>& exclude_sorted = {}) {
  require(candidates.size() == scores.size(), "recommend_top_n: candidate/score size mismatch");
  std::vector<int> order;
  order.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (!std::binary_search(exclude_sorted.begin(), exclude_sorted.end(), candidates[k])) {
      order.push_back(static_cast<int>(k));
    }
  }
  require(!order.empty(), "recommend_top_n: no candidates after exclusion");
  const int keep = std::min<int>(n, static_cast<int>(order.size()));
  std::partial_sort(order.begin(), order.begin() + keep, order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  });
  std::vector<int> top(keep);
  for (int k = 0; k < keep; ++k) top[k] = candidates[order[k]];
  return top;
}

}  // namespace rhcnn
