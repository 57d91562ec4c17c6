#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "rhcnn/common.hpp"

namespace rhcnn {

// Sparse binary user x item matrix; positives store exactly the 1-entries.
// c_pos/c_neg are the per-entry confidence weights for the squared-error
// rating cost.
struct InteractionMatrix {
  int n_users = 0;
  int n_items = 0;
  std::vector<std::vector<int>> positives;  // per user, sorted ascending
  double c_pos = 1.0;
  double c_neg = 1.0;

  std::size_t interaction_count() const {
    std::size_t n = 0;
    for (const auto& p : positives) n += p.size();
    return n;
  }

  double density() const {
    if (n_users == 0 || n_items == 0) return 0.0;
    return static_cast<double>(interaction_count()) /
           (static_cast<double>(n_users) * static_cast<double>(n_items));
  }

  bool has(int user, int item) const {
    const auto& p = positives[user];
    return std::binary_search(p.begin(), p.end(), item);
  }

  std::vector<int> likes_per_item() const {
    std::vector<int> likes(n_items, 0);
    for (const auto& p : positives) {
      for (int j : p) ++likes[j];
    }
    return likes;
  }
};

}  // namespace rhcnn
