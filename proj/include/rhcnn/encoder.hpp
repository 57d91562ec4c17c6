#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rhcnn/common.hpp"
#include "rhcnn/rng.hpp"

namespace rhcnn {

enum class EncoderKind { rhcnn, gru_baseline, embed_baseline };

inline std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::rhcnn: return "rhcnn";
    case EncoderKind::gru_baseline: return "gru_baseline";
    case EncoderKind::embed_baseline: return "embed_baseline";
  }
  return "?";
}

inline EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "rhcnn") return EncoderKind::rhcnn;
  if (s == "gru_baseline") return EncoderKind::gru_baseline;
  if (s == "embed_baseline") return EncoderKind::embed_baseline;
  fail("unknown encoder kind: '", s, "' (expected rhcnn, gru_baseline, or embed_baseline)");
}

struct EncoderConfig {
  EncoderKind kind = EncoderKind::rhcnn;
  int vocab_size = 0;
  int embedding_dim = 200;  // K_w
  int stage1_dim = 400;     // contextual width, split across directions
  int stage2_dim = 200;     // second recurrent layer of the gru baseline
  int conv1_filters = 500;
  int output_dim = 200;  // p
  int conv_kernel_width = 3;
  double dropout1 = 0.3;
  double dropout2 = 0.3;
  double dropout3 = 0.2;
  bool bidirectional = true;

  int directions() const { return bidirectional ? 2 : 1; }
  int stage1_hidden() const { return stage1_dim / directions(); }
  int stage2_hidden() const { return stage2_dim / directions(); }
  // Contextual states concatenated with the original embeddings.
  int stage1_out_dim() const { return stage1_dim + embedding_dim; }

  void validate() const {
    require(vocab_size > 0, "encoder config: vocab_size must be positive");
    require(embedding_dim > 0 && stage1_dim > 0 && output_dim > 0,
            "encoder config: dimensions must be positive");
    require(conv_kernel_width >= 1 && conv_kernel_width % 2 == 1,
            "encoder config: conv_kernel_width must be odd");
    require(!bidirectional || stage1_dim % 2 == 0,
            "encoder config: stage1_dim must be even when bidirectional");
    if (kind == EncoderKind::gru_baseline) {
      require(!bidirectional || stage2_dim % 2 == 0,
              "encoder config: stage2_dim must be even when bidirectional");
      require(output_dim == stage2_dim,
              "encoder config: gru_baseline output_dim must equal stage2_dim");
    }
    if (kind == EncoderKind::embed_baseline) {
      require(output_dim == embedding_dim,
              "encoder config: embed_baseline output_dim must equal embedding_dim");
    }
    for (double d : {dropout1, dropout2, dropout3}) {
      require(d >= 0.0 && d < 1.0, "encoder config: dropout rates must lie in [0, 1)");
    }
  }
};

// One gated recurrent direction: update/reset gates and the candidate state.
struct GruCell {
  Mat w_update, w_reset, w_cand;  // hidden x input
  Mat u_update, u_reset, u_cand;  // hidden x hidden
  Vec b_update, b_reset, b_cand;

  int hidden() const { return static_cast<int>(w_update.rows()); }
  bool allocated() const { return w_update.size() > 0; }
};

struct EncoderParameters {
  Mat word_embeddings;  // vocab x K_w
  GruCell gru1_fwd, gru1_bwd;
  GruCell gru2_fwd, gru2_bwd;          // gru baseline second layer
  Mat highway_wh, highway_wt;          // D x D
  Vec highway_bh, highway_bt;
  std::vector<Mat> conv1_w;            // per kernel tap: filters x input dim
  Vec conv1_b;
  std::vector<Mat> conv2_w;
  Vec conv2_b;
};

// Flat named view of one parameter block; shared by the optimizer, the
// checkpoint writer, and the finite-difference harness.
struct ParamRef {
  std::string name;
  double* data;
  Eigen::Index rows, cols;
  Eigen::Index size() const { return rows * cols; }
};

namespace detail {

inline void add_gru_refs(std::vector<ParamRef>& refs, GruCell& g, const std::string& prefix) {
  if (!g.allocated()) return;
  const auto add = [&](const char* n, Mat& m) {
    refs.push_back({prefix + "." + n, m.data(), m.rows(), m.cols()});
  };
  const auto addv = [&](const char* n, Vec& v) {
    refs.push_back({prefix + "." + n, v.data(), v.rows(), 1});
  };
  add("w_update", g.w_update);
  add("u_update", g.u_update);
  addv("b_update", g.b_update);
  add("w_reset", g.w_reset);
  add("u_reset", g.u_reset);
  addv("b_reset", g.b_reset);
  add("w_cand", g.w_cand);
  add("u_cand", g.u_cand);
  addv("b_cand", g.b_cand);
}

}  // namespace detail

inline std::vector<ParamRef> param_refs(EncoderParameters& p) {
  std::vector<ParamRef> refs;
  refs.push_back({"word_embeddings", p.word_embeddings.data(), p.word_embeddings.rows(),
                  p.word_embeddings.cols()});
  detail::add_gru_refs(refs, p.gru1_fwd, "gru1_fwd");
  detail::add_gru_refs(refs, p.gru1_bwd, "gru1_bwd");
  detail::add_gru_refs(refs, p.gru2_fwd, "gru2_fwd");
  detail::add_gru_refs(refs, p.gru2_bwd, "gru2_bwd");
  if (p.highway_wh.size() > 0) {
    refs.push_back({"highway.wh", p.highway_wh.data(), p.highway_wh.rows(), p.highway_wh.cols()});
    refs.push_back({"highway.bh", p.highway_bh.data(), p.highway_bh.rows(), 1});
    refs.push_back({"highway.wt", p.highway_wt.data(), p.highway_wt.rows(), p.highway_wt.cols()});
    refs.push_back({"highway.bt", p.highway_bt.data(), p.highway_bt.rows(), 1});
  }
  for (std::size_t d = 0; d < p.conv1_w.size(); ++d) {
    refs.push_back({"conv1.w" + std::to_string(d), p.conv1_w[d].data(), p.conv1_w[d].rows(),
                    p.conv1_w[d].cols()});
  }
  if (p.conv1_b.size() > 0) refs.push_back({"conv1.b", p.conv1_b.data(), p.conv1_b.rows(), 1});
  for (std::size_t d = 0; d < p.conv2_w.size(); ++d) {
    refs.push_back({"conv2.w" + std::to_string(d), p.conv2_w[d].data(), p.conv2_w[d].rows(),
                    p.conv2_w[d].cols()});
  }
  if (p.conv2_b.size() > 0) refs.push_back({"conv2.b", p.conv2_b.data(), p.conv2_b.rows(), 1});
  return refs;
}

namespace detail {

// Thin orthogonal factor of a Gaussian matrix, sign-fixed for determinism.
inline Mat orthogonal(int rows, int cols, Rng& rng) {
  const int m = std::max(rows, cols), n = std::min(rows, cols);
  Mat g(m, n);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = rng.gaussian();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(m, n);
  const Mat r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (int c = 0; c < n; ++c) {
    if (r(c, c) < 0) q.col(c) = -q.col(c);
  }
  return rows >= cols ? q : Mat(q.transpose());
}

inline Mat fan_in_uniform(int rows, int cols, int fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

inline GruCell init_gru(int in_dim, int hidden, Rng& rng) {
  GruCell g;
  g.w_update = orthogonal(hidden, in_dim, rng);
  g.u_update = orthogonal(hidden, hidden, rng);
  g.b_update = Vec::Zero(hidden);
  g.w_reset = orthogonal(hidden, in_dim, rng);
  g.u_reset = orthogonal(hidden, hidden, rng);
  g.b_reset = Vec::Zero(hidden);
  g.w_cand = orthogonal(hidden, in_dim, rng);
  g.u_cand = orthogonal(hidden, hidden, rng);
  g.b_cand = Vec::Zero(hidden);
  return g;
}

inline GruCell zeros_like(const GruCell& g) {
  GruCell z;
  if (!g.allocated()) return z;
  z.w_update = Mat::Zero(g.w_update.rows(), g.w_update.cols());
  z.u_update = Mat::Zero(g.u_update.rows(), g.u_update.cols());
  z.b_update = Vec::Zero(g.b_update.rows());
  z.w_reset = Mat::Zero(g.w_reset.rows(), g.w_reset.cols());
  z.u_reset = Mat::Zero(g.u_reset.rows(), g.u_reset.cols());
  z.b_reset = Vec::Zero(g.b_reset.rows());
  z.w_cand = Mat::Zero(g.w_cand.rows(), g.w_cand.cols());
  z.u_cand = Mat::Zero(g.u_cand.rows(), g.u_cand.cols());
  z.b_cand = Vec::Zero(g.b_cand.rows());
  return z;
}

}  // namespace detail

inline EncoderParameters init_encoder(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  EncoderParameters p;
  p.word_embeddings = Mat(cfg.vocab_size, cfg.embedding_dim);
  for (Eigen::Index c = 0; c < p.word_embeddings.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.word_embeddings.rows(); ++r) {
      p.word_embeddings(r, c) = rng.uniform(-0.05, 0.05);
    }
  }

  if (cfg.kind == EncoderKind::rhcnn || cfg.kind == EncoderKind::gru_baseline) {
    p.gru1_fwd = detail::init_gru(cfg.embedding_dim, cfg.stage1_hidden(), rng);
    if (cfg.bidirectional) p.gru1_bwd = detail::init_gru(cfg.embedding_dim, cfg.stage1_hidden(), rng);
  }
  if (cfg.kind == EncoderKind::gru_baseline) {
    p.gru2_fwd = detail::init_gru(cfg.stage1_dim, cfg.stage2_hidden(), rng);
    if (cfg.bidirectional) p.gru2_bwd = detail::init_gru(cfg.stage1_dim, cfg.stage2_hidden(), rng);
  }
  if (cfg.kind == EncoderKind::rhcnn) {
    const int d = cfg.stage1_out_dim();
    p.highway_wh = detail::fan_in_uniform(d, d, d, rng);
    p.highway_bh = Vec::Zero(d);
    p.highway_wt = detail::fan_in_uniform(d, d, d, rng);
    // Carry-biased start: the layer initially passes its input through.
    p.highway_bt = Vec::Constant(d, -2.0);

    const int w = cfg.conv_kernel_width;
    p.conv1_w.resize(w);
    for (int t = 0; t < w; ++t) {
      p.conv1_w[t] = detail::fan_in_uniform(cfg.conv1_filters, d, w * d, rng);
    }
    p.conv1_b = Vec::Zero(cfg.conv1_filters);
    p.conv2_w.resize(w);
    for (int t = 0; t < w; ++t) {
      p.conv2_w[t] = detail::fan_in_uniform(cfg.output_dim, cfg.conv1_filters,
                                            w * cfg.conv1_filters, rng);
    }
    p.conv2_b = Vec::Zero(cfg.output_dim);
  }
  return p;
}

inline EncoderParameters zeros_like(const EncoderParameters& p) {
  EncoderParameters z;
  z.word_embeddings = Mat::Zero(p.word_embeddings.rows(), p.word_embeddings.cols());
  z.gru1_fwd = detail::zeros_like(p.gru1_fwd);
  z.gru1_bwd = detail::zeros_like(p.gru1_bwd);
  z.gru2_fwd = detail::zeros_like(p.gru2_fwd);
  z.gru2_bwd = detail::zeros_like(p.gru2_bwd);
  if (p.highway_wh.size() > 0) {
    z.highway_wh = Mat::Zero(p.highway_wh.rows(), p.highway_wh.cols());
    z.highway_bh = Vec::Zero(p.highway_bh.rows());
    z.highway_wt = Mat::Zero(p.highway_wt.rows(), p.highway_wt.cols());
    z.highway_bt = Vec::Zero(p.highway_bt.rows());
  }
  for (const Mat& w : p.conv1_w) z.conv1_w.push_back(Mat::Zero(w.rows(), w.cols()));
  if (p.conv1_b.size() > 0) z.conv1_b = Vec::Zero(p.conv1_b.rows());
  for (const Mat& w : p.conv2_w) z.conv2_w.push_back(Mat::Zero(w.rows(), w.cols()));
  if (p.conv2_b.size() > 0) z.conv2_b = Vec::Zero(p.conv2_b.rows());
  return z;
}

namespace detail {

inline Mat sigmoid(const Mat& x) { return ((-x.array()).exp() + 1.0).inverse().matrix(); }
inline Vec sigmoid(const Vec& x) { return ((-x.array()).exp() + 1.0).inverse().matrix(); }

inline Mat reverse_cols(const Mat& x) { return x.rowwise().reverse(); }

struct GruTrace {
  Mat h, z, r, hc;  // hidden x n, in processing order
};

// One direction over x (input x n, columns in processing order).
// Token-parallel work runs as matrix products; only the recurrence is serial.
inline GruTrace gru_forward(const GruCell& g, const Mat& x) {
  const Eigen::Index hid = g.w_update.rows(), n = x.cols();
  GruTrace tr;
  tr.h.resize(hid, n);
  tr.z.resize(hid, n);
  tr.r.resize(hid, n);
  tr.hc.resize(hid, n);

  Mat az = g.w_update * x;
  Mat ar = g.w_reset * x;
  Mat ah = g.w_cand * x;
  Vec h_prev = Vec::Zero(hid);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Vec z = sigmoid(Vec(az.col(t) + g.u_update * h_prev + g.b_update));
    const Vec r = sigmoid(Vec(ar.col(t) + g.u_reset * h_prev + g.b_reset));
    const Vec hc = (ah.col(t) + g.u_cand * (r.array() * h_prev.array()).matrix() + g.b_cand)
                       .array()
                       .tanh();
    tr.z.col(t) = z;
    tr.r.col(t) = r;
    tr.hc.col(t) = hc;
    h_prev = ((1.0 - z.array()) * h_prev.array() + z.array() * hc.array()).matrix();
    tr.h.col(t) = h_prev;
  }
  return tr;
}

// Backpropagation through time; returns dx and accumulates into grads.
inline Mat gru_backward(const GruCell& g, const Mat& x, const GruTrace& tr, const Mat& dh_out,
                        GruCell& grads) {
  const Eigen::Index hid = g.w_update.rows(), n = x.cols();
  Mat dz(hid, n), dr(hid, n), dhc(hid, n);
  Mat h_prev_all(hid, n), rh_all(hid, n);

  Vec carry = Vec::Zero(hid);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const Vec h_prev = t > 0 ? Vec(tr.h.col(t - 1)) : Vec(Vec::Zero(hid));
    h_prev_all.col(t) = h_prev;
    rh_all.col(t) = (tr.r.col(t).array() * h_prev.array()).matrix();

    const Vec dh = dh_out.col(t) + carry;
    const auto z = tr.z.col(t).array();
    const auto hc = tr.hc.col(t).array();

    const Vec dhc_t = (dh.array() * z * (1.0 - hc * hc)).matrix();
    const Vec dz_t = (dh.array() * (hc - h_prev.array()) * z * (1.0 - z)).matrix();
    const Vec drh = g.u_cand.transpose() * dhc_t;
    const Vec dr_t =
        (drh.array() * h_prev.array() * tr.r.col(t).array() * (1.0 - tr.r.col(t).array()))
            .matrix();

    dhc.col(t) = dhc_t;
    dz.col(t) = dz_t;
    dr.col(t) = dr_t;

    carry = (dh.array() * (1.0 - z)).matrix();
    carry += (drh.array() * tr.r.col(t).array()).matrix();
    carry += g.u_reset.transpose() * dr_t;
    carry += g.u_update.transpose() * dz_t;
  }

  grads.w_update += dz * x.transpose();
  grads.u_update += dz * h_prev_all.transpose();
  grads.b_update += dz.rowwise().sum();
  grads.w_reset += dr * x.transpose();
  grads.u_reset += dr * h_prev_all.transpose();
  grads.b_reset += dr.rowwise().sum();
  grads.w_cand += dhc * x.transpose();
  grads.u_cand += dhc * rh_all.transpose();
  grads.b_cand += dhc.rowwise().sum();

  return g.w_update.transpose() * dz + g.w_reset.transpose() * dr + g.w_cand.transpose() * dhc;
}

inline Mat conv_same_forward(const std::vector<Mat>& w, const Vec& b, const Mat& x) {
  const Eigen::Index out = w[0].rows(), n = x.cols();
  const int width = static_cast<int>(w.size());
  const int pad = width / 2;
  Mat pre = b.replicate(1, n);
  for (int d = 0; d < width; ++d) {
    const int s = d - pad;
    const Eigen::Index t0 = std::max(0, -s);
    const Eigen::Index len = n - std::max(0, s) - t0;
    if (len <= 0) continue;
    pre.block(0, t0, out, len).noalias() += w[d] * x.block(0, t0 + s, x.rows(), len);
  }
  return pre;
}

inline Mat conv_same_backward(const std::vector<Mat>& w, const Mat& x, const Mat& dpre,
                              std::vector<Mat>& grads_w, Vec& grads_b) {
  const Eigen::Index out = dpre.rows(), n = x.cols();
  const int width = static_cast<int>(w.size());
  const int pad = width / 2;
  Mat dx = Mat::Zero(x.rows(), n);
  for (int d = 0; d < width; ++d) {
    const int s = d - pad;
    const Eigen::Index t0 = std::max(0, -s);
    const Eigen::Index len = n - std::max(0, s) - t0;
    if (len <= 0) continue;
    grads_w[d].noalias() +=
        dpre.block(0, t0, out, len) * x.block(0, t0 + s, x.rows(), len).transpose();
    dx.block(0, t0 + s, x.rows(), len).noalias() += w[d].transpose() * dpre.block(0, t0, out, len);
  }
  grads_b += dpre.rowwise().sum();
  return dx;
}

inline Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  const double keep = 1.0 - rate;
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      m(r, c) = rng.uniform01() < keep ? 1.0 / keep : 0.0;
    }
  }
  return m;
}

}  // namespace detail

// Embedding rows for a token-id sequence, one column per token.
inline Mat embed_tokens(const std::vector<std::int32_t>& seq, const EncoderParameters& p) {
  Mat e(p.word_embeddings.cols(), seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    require(seq[t] >= 0 && seq[t] < p.word_embeddings.rows(), "embed_tokens: token id ", seq[t],
            " outside embedding table of size ", p.word_embeddings.rows());
    e.col(t) = p.word_embeddings.row(seq[t]).transpose();
  }
  return e;
}

// Bidirectional recurrent pass; column t is [context_t ; embedded_t].
inline Mat stage1_contextualize(const Mat& embedded, const EncoderParameters& p,
                                const EncoderConfig& cfg) {
  const Eigen::Index n = embedded.cols();
  Mat s1(cfg.stage1_out_dim(), n);
  const auto fwd = detail::gru_forward(p.gru1_fwd, embedded);
  s1.topRows(cfg.stage1_hidden()) = fwd.h;
  if (cfg.bidirectional) {
    const auto bwd = detail::gru_forward(p.gru1_bwd, detail::reverse_cols(embedded));
    s1.middleRows(cfg.stage1_hidden(), cfg.stage1_hidden()) = detail::reverse_cols(bwd.h);
  }
  s1.bottomRows(cfg.embedding_dim) = embedded;
  return s1;
}

// y = H(x) . T(x) + x . (1 - T(x)), applied per token.
inline Mat stage2_highway(const Mat& x, const EncoderParameters& p) {
  const Mat h = ((p.highway_wh * x).colwise() + p.highway_bh).array().tanh().matrix();
  const Mat t = detail::sigmoid(Mat((p.highway_wt * x).colwise() + p.highway_bt));
  return (h.array() * t.array() + x.array() * (1.0 - t.array())).matrix();
}

// Two same-padded ReLU convolutions plus max-over-time pooling.
inline Vec stage3_convolve_pool(const Mat& x, const EncoderParameters& p) {
  const Mat c1 = detail::conv_same_forward(p.conv1_w, p.conv1_b, x).cwiseMax(0.0);
  const Mat c2 = detail::conv_same_forward(p.conv2_w, p.conv2_b, c1).cwiseMax(0.0);
  return c2.rowwise().maxCoeff();
}

// Everything encode_backward needs to replay one document.
struct EncodeTrace {
  Mat embedded;
  detail::GruTrace g1f, g1b, g2f, g2b;
  Mat s1, drop1, s1d;
  Mat hw_h, hw_t, hw_out, drop2, hwd;
  Mat conv1_pre, conv1_out, conv2_pre, conv2_out;
  std::vector<Eigen::Index> argmax;
  Mat l1, l1d, l2, l2d;  // gru baseline layers
  Vec pooled, drop3, out;
};

inline EncodeTrace encode_forward(const std::vector<std::int32_t>& seq,
                                  const EncoderParameters& p, const EncoderConfig& cfg,
                                  bool training = false, Rng* rng = nullptr) {
  require(!seq.empty(), "encode: empty token sequence");
  require(!training || rng != nullptr, "encode: training mode needs an rng for dropout");
  EncodeTrace tr;
  tr.embedded = embed_tokens(seq, p);
  const Eigen::Index n = tr.embedded.cols();

  switch (cfg.kind) {
    case EncoderKind::embed_baseline: {
      tr.pooled = tr.embedded.rowwise().mean();
      break;
    }
    case EncoderKind::gru_baseline: {
      tr.l1.resize(cfg.stage1_dim, n);
      tr.g1f = detail::gru_forward(p.gru1_fwd, tr.embedded);
      tr.l1.topRows(cfg.stage1_hidden()) = tr.g1f.h;
      if (cfg.bidirectional) {
        tr.g1b = detail::gru_forward(p.gru1_bwd, detail::reverse_cols(tr.embedded));
        tr.l1.bottomRows(cfg.stage1_hidden()) = detail::reverse_cols(tr.g1b.h);
      }
      tr.l1d = tr.l1;
      if (training && cfg.dropout1 > 0.0) {
        tr.drop1 = detail::dropout_mask(tr.l1.rows(), n, cfg.dropout1, *rng);
        tr.l1d = tr.l1.cwiseProduct(tr.drop1);
      }
      tr.l2.resize(cfg.stage2_dim, n);
      tr.g2f = detail::gru_forward(p.gru2_fwd, tr.l1d);
      tr.l2.topRows(cfg.stage2_hidden()) = tr.g2f.h;
      if (cfg.bidirectional) {
        tr.g2b = detail::gru_forward(p.gru2_bwd, detail::reverse_cols(tr.l1d));
        tr.l2.bottomRows(cfg.stage2_hidden()) = detail::reverse_cols(tr.g2b.h);
      }
      tr.l2d = tr.l2;
      if (training && cfg.dropout2 > 0.0) {
        tr.drop2 = detail::dropout_mask(tr.l2.rows(), n, cfg.dropout2, *rng);
        tr.l2d = tr.l2.cwiseProduct(tr.drop2);
      }
      tr.pooled = tr.l2d.rowwise().mean();
      break;
    }
    case EncoderKind::rhcnn: {
      tr.s1.resize(cfg.stage1_out_dim(), n);
      tr.g1f = detail::gru_forward(p.gru1_fwd, tr.embedded);
      tr.s1.topRows(cfg.stage1_hidden()) = tr.g1f.h;
      if (cfg.bidirectional) {
        tr.g1b = detail::gru_forward(p.gru1_bwd, detail::reverse_cols(tr.embedded));
        tr.s1.middleRows(cfg.stage1_hidden(), cfg.stage1_hidden()) =
            detail::reverse_cols(tr.g1b.h);
      }
      tr.s1.bottomRows(cfg.embedding_dim) = tr.embedded;
      tr.s1d = tr.s1;
      if (training && cfg.dropout1 > 0.0) {
        tr.drop1 = detail::dropout_mask(tr.s1.rows(), n, cfg.dropout1, *rng);
        tr.s1d = tr.s1.cwiseProduct(tr.drop1);
      }
      tr.hw_h = ((p.highway_wh * tr.s1d).colwise() + p.highway_bh).array().tanh().matrix();
      tr.hw_t = detail::sigmoid(Mat((p.highway_wt * tr.s1d).colwise() + p.highway_bt));
      tr.hw_out = (tr.hw_h.array() * tr.hw_t.array() + tr.s1d.array() * (1.0 - tr.hw_t.array()))
                      .matrix();
      tr.hwd = tr.hw_out;
      if (training && cfg.dropout2 > 0.0) {
        tr.drop2 = detail::dropout_mask(tr.hw_out.rows(), n, cfg.dropout2, *rng);
        tr.hwd = tr.hw_out.cwiseProduct(tr.drop2);
      }
      tr.conv1_pre = detail::conv_same_forward(p.conv1_w, p.conv1_b, tr.hwd);
      tr.conv1_out = tr.conv1_pre.cwiseMax(0.0);
      tr.conv2_pre = detail::conv_same_forward(p.conv2_w, p.conv2_b, tr.conv1_out);
      tr.conv2_out = tr.conv2_pre.cwiseMax(0.0);
      tr.pooled.resize(cfg.output_dim);
      tr.argmax.resize(cfg.output_dim);
      for (int f = 0; f < cfg.output_dim; ++f) {
        Eigen::Index best = 0;
        tr.pooled(f) = tr.conv2_out.row(f).maxCoeff(&best);
        tr.argmax[f] = best;
      }
      break;
    }
  }

  tr.out = tr.pooled;
  if (training && cfg.dropout3 > 0.0) {
    tr.drop3 = detail::dropout_mask(tr.pooled.rows(), 1, cfg.dropout3, *rng).col(0);
    tr.out = tr.pooled.cwiseProduct(tr.drop3);
  }
  return tr;
}

// Latent vector g(x) for one document. Deterministic when training is false.
inline Vec encode(const std::vector<std::int32_t>& seq, const EncoderParameters& p,
                  const EncoderConfig& cfg, bool training = false, Rng* rng = nullptr) {
  return encode_forward(seq, p, cfg, training, rng).out;
}

// Exact reverse-mode gradients of everything in EncoderParameters for one
// document, accumulated into grads.
inline void encode_backward(const std::vector<std::int32_t>& seq, const EncodeTrace& tr,
                            const Vec& dout, const EncoderParameters& p, const EncoderConfig& cfg,
                            EncoderParameters& grads) {
  const Eigen::Index n = tr.embedded.cols();
  Vec dpooled = dout;
  if (tr.drop3.size() > 0) dpooled = dpooled.cwiseProduct(tr.drop3);

  Mat dembedded;
  switch (cfg.kind) {
    case EncoderKind::embed_baseline: {
      dembedded = (dpooled / static_cast<double>(n)).replicate(1, n);
      break;
    }
    case EncoderKind::gru_baseline: {
      Mat dl2d = (dpooled / static_cast<double>(n)).replicate(1, n);
      if (tr.drop2.size() > 0) dl2d = dl2d.cwiseProduct(tr.drop2);
      Mat dl1d = Mat::Zero(cfg.stage1_dim, n);
      dl1d += detail::gru_backward(p.gru2_fwd, tr.l1d, tr.g2f,
                                   dl2d.topRows(cfg.stage2_hidden()), grads.gru2_fwd);
      if (cfg.bidirectional) {
        dl1d += detail::reverse_cols(detail::gru_backward(
            p.gru2_bwd, detail::reverse_cols(tr.l1d), tr.g2b,
            detail::reverse_cols(Mat(dl2d.bottomRows(cfg.stage2_hidden()))), grads.gru2_bwd));
      }
      if (tr.drop1.size() > 0) dl1d = dl1d.cwiseProduct(tr.drop1);
      dembedded = detail::gru_backward(p.gru1_fwd, tr.embedded, tr.g1f,
                                       dl1d.topRows(cfg.stage1_hidden()), grads.gru1_fwd);
      if (cfg.bidirectional) {
        dembedded += detail::reverse_cols(detail::gru_backward(
            p.gru1_bwd, detail::reverse_cols(tr.embedded), tr.g1b,
            detail::reverse_cols(Mat(dl1d.bottomRows(cfg.stage1_hidden()))), grads.gru1_bwd));
      }
      break;
    }
    case EncoderKind::rhcnn: {
      // Unpool: the gradient reaches only each filter's argmax position.
      Mat dconv2 = Mat::Zero(cfg.output_dim, n);
      for (int f = 0; f < cfg.output_dim; ++f) dconv2(f, tr.argmax[f]) = dpooled(f);
      const Mat dconv2_pre =
          (dconv2.array() * (tr.conv2_pre.array() > 0.0).cast<double>()).matrix();
      Mat dconv1 =
          detail::conv_same_backward(p.conv2_w, tr.conv1_out, dconv2_pre, grads.conv2_w,
                                     grads.conv2_b);
      const Mat dconv1_pre =
          (dconv1.array() * (tr.conv1_pre.array() > 0.0).cast<double>()).matrix();
      Mat dhwd =
          detail::conv_same_backward(p.conv1_w, tr.hwd, dconv1_pre, grads.conv1_w, grads.conv1_b);
      if (tr.drop2.size() > 0) dhwd = dhwd.cwiseProduct(tr.drop2);

      const Mat dh = dhwd.cwiseProduct(tr.hw_t);
      const Mat dt = (dhwd.array() * (tr.hw_h.array() - tr.s1d.array())).matrix();
      Mat ds1d = (dhwd.array() * (1.0 - tr.hw_t.array())).matrix();
      const Mat dah = (dh.array() * (1.0 - tr.hw_h.array() * tr.hw_h.array())).matrix();
      const Mat dat = (dt.array() * tr.hw_t.array() * (1.0 - tr.hw_t.array())).matrix();
      grads.highway_wh.noalias() += dah * tr.s1d.transpose();
      grads.highway_bh += dah.rowwise().sum();
      grads.highway_wt.noalias() += dat * tr.s1d.transpose();
      grads.highway_bt += dat.rowwise().sum();
      ds1d.noalias() += p.highway_wh.transpose() * dah;
      ds1d.noalias() += p.highway_wt.transpose() * dat;

      if (tr.drop1.size() > 0) ds1d = ds1d.cwiseProduct(tr.drop1);
      dembedded = Mat(ds1d.bottomRows(cfg.embedding_dim));
      dembedded += detail::gru_backward(p.gru1_fwd, tr.embedded, tr.g1f,
                                        ds1d.topRows(cfg.stage1_hidden()), grads.gru1_fwd);
      if (cfg.bidirectional) {
        dembedded += detail::reverse_cols(detail::gru_backward(
            p.gru1_bwd, detail::reverse_cols(tr.embedded), tr.g1b,
            detail::reverse_cols(Mat(ds1d.middleRows(cfg.stage1_hidden(), cfg.stage1_hidden()))),
            grads.gru1_bwd));
      }
      break;
    }
  }

  for (std::size_t t = 0; t < seq.size(); ++t) {
    grads.word_embeddings.row(seq[t]) += dembedded.col(t).transpose();
  }
}

// Batch gradient helper: encodes and backpropagates documents in the given
// order, summing into a single gradient set. Fails on non-finite output,
// naming the first offending parameter block.
inline EncoderParameters encoder_gradients(
    const std::vector<const std::vector<std::int32_t>*>& docs, const std::vector<Vec>& dout,
    const EncoderParameters& p, const EncoderConfig& cfg) {
  EncoderParameters grads = zeros_like(p);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const EncodeTrace tr = encode_forward(*docs[i], p, cfg, false, nullptr);
    encode_backward(*docs[i], tr, dout[i], p, cfg, grads);
  }
  for (const ParamRef& ref : param_refs(grads)) {
    for (Eigen::Index k = 0; k < ref.size(); ++k) {
      require(std::isfinite(ref.data[k]), "non-finite gradient in parameter block ", ref.name);
    }
  }
  return grads;
}

}  // namespace rhcnn
