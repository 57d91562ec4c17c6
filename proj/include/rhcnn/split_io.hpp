#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rhcnn/common.hpp"
#include "rhcnn/evaluator.hpp"

namespace rhcnn {

inline nlohmann::ordered_json split_plan_to_json(const SplitPlan& plan) {
  nlohmann::ordered_json j;
  j["format"] = "rhcnn-split-v1";
  j["mode"] = to_string(plan.mode);
  j["n_folds"] = plan.n_folds;
  j["seed"] = plan.seed;
  j["pin_threshold"] = plan.pin_threshold;
  j["validation_fraction"] = plan.validation_fraction;
  if (plan.mode == SplitMode::warm) {
    j["pair_fold"] = plan.pair_fold;
  } else {
    j["item_fold"] = plan.item_fold;
  }
  j["validation"] = plan.validation;
  return j;
}

inline SplitPlan split_plan_from_json(const nlohmann::ordered_json& j) {
  require(j.value("format", "") == "rhcnn-split-v1", "not a split plan file");
  SplitPlan plan;
  plan.mode = split_mode_from_string(j.at("mode").get<std::string>());
  plan.n_folds = j.at("n_folds").get<int>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.pin_threshold = j.at("pin_threshold").get<int>();
  plan.validation_fraction = j.at("validation_fraction").get<double>();
  if (plan.mode == SplitMode::warm) {
    plan.pair_fold = j.at("pair_fold").get<std::vector<std::vector<int>>>();
  } else {
    plan.item_fold = j.at("item_fold").get<std::vector<int>>();
  }
  plan.validation = j.at("validation").get<std::vector<std::vector<std::vector<int>>>>();
  return plan;
}

inline void write_split_plan(const SplitPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write split plan: ", path);
  out << split_plan_to_json(plan).dump() << "\n";
  require(out.good(), "split plan write failed: ", path);
}

inline SplitPlan read_split_plan(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open split plan: ", path);
  nlohmann::ordered_json j;
  in >> j;
  return split_plan_from_json(j);
}

}  // namespace rhcnn
