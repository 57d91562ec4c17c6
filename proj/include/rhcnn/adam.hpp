#pragma once

#include <cmath>
#include <vector>

#include "rhcnn/common.hpp"
#include "rhcnn/encoder.hpp"

namespace rhcnn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moment buffers, one flat array per parameter block.
struct AdamState {
  std::vector<std::vector<double>> m, v;
  long step = 0;

  void init(const std::vector<ParamRef>& params) {
    m.clear();
    v.clear();
    for (const ParamRef& p : params) {
      m.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
      v.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
    }
    step = 0;
  }

  void update(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
              const AdamConfig& cfg) {
    require(params.size() == grads.size() && params.size() == m.size(),
            "adam: parameter/gradient block mismatch");
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t b = 0; b < params.size(); ++b) {
      require(params[b].size() == grads[b].size(), "adam: block ", params[b].name,
              " shape mismatch");
      double* x = params[b].data;
      const double* gr = grads[b].data;
      double* mb = m[b].data();
      double* vb = v[b].data();
      const Eigen::Index n = params[b].size();
      for (Eigen::Index k = 0; k < n; ++k) {
        mb[k] = cfg.beta1 * mb[k] + (1.0 - cfg.beta1) * gr[k];
        vb[k] = cfg.beta2 * vb[k] + (1.0 - cfg.beta2) * gr[k] * gr[k];
        x[k] -= cfg.lr * (mb[k] / bc1) / (std::sqrt(vb[k] / bc2) + cfg.eps);
      }
    }
  }
};

}  // namespace rhcnn
