#pragma once

#include <vector>

#include "rhcnn/cf_model.hpp"
#include "rhcnn/encoder.hpp"
#include "rhcnn/rng.hpp"

namespace rhcnn {

// Everything trainable, plus the configuration that shaped it.
struct Model {
  EncoderConfig encoder_config;
  MultiTaskConfig multitask;
  EncoderParameters encoder;
  LatentTables tables;

  std::vector<ParamRef> refs() {
    std::vector<ParamRef> r = param_refs(encoder);
    for (ParamRef& t : param_refs(tables)) r.push_back(t);
    return r;
  }
};

inline Model init_model(const EncoderConfig& enc_cfg, const MultiTaskConfig& mt_cfg, int n_users,
                        int n_items, int n_tags, std::uint64_t seed) {
  enc_cfg.validate();
  mt_cfg.validate();
  Rng rng(seed);
  Model m;
  m.encoder_config = enc_cfg;
  m.multitask = mt_cfg;
  m.encoder = init_encoder(enc_cfg, rng);
  m.tables = init_tables(n_users, n_items, n_tags, enc_cfg.output_dim, rng);
  return m;
}

}  // namespace rhcnn
