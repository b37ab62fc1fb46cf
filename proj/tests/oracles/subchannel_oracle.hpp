#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "adacast/ofdm_channel.hpp"

namespace testing {

// Step-by-step replay of the greedy assignment: a list of free subchannels,
// explicit capacity bookkeeping, first-minimum / first-maximum selection.
inline adacast::SubchannelSets greedy_oracle(const Eigen::MatrixXd& h, const std::vector<double>& eta, double g) {
  const int p_count = static_cast<int>(h.rows());
  const int l_count = static_cast<int>(h.cols());
  std::vector<int> free(l_count);
  std::iota(free.begin(), free.end(), 0);
  adacast::SubchannelSets out(p_count);
  std::vector<double> rate(p_count, 0.0);
  auto grab = [&](int p) {
    std::size_t pick = 0;
    for (std::size_t k = 1; k < free.size(); ++k)
      if (h(p, free[k]) > h(p, free[pick])) pick = k;
    const int l = free[pick];
    free.erase(free.begin() + static_cast<std::ptrdiff_t>(pick));
    out[p].push_back(l);
    rate[p] += std::log2(1 + g * h(p, l)) / l_count;
  };
  for (int p = 0; p < p_count; ++p) grab(p);
  while (!free.empty()) {
    std::vector<double> ratio(p_count);
    for (int p = 0; p < p_count; ++p) ratio[p] = rate[p] / eta[p];
    grab(static_cast<int>(std::min_element(ratio.begin(), ratio.end()) - ratio.begin()));
  }
  return out;
}

// Every P <= 3, P <= L <= 5 with CNR rows drawn from {1, 2, 4} (shared
// across packets, so ties are everywhere). Returns the instance count and
// the number of mismatches against `allocate_subchannels`.
inline std::pair<int, int> exhaustive_assignment_check() {
  const std::vector<std::vector<double>> etas = {
      {1.0}, {0.5, 0.5}, {0.7, 0.3}, {0.2, 0.3, 0.5}, {1 / 3., 1 / 3., 1 / 3.}};
  int instances = 0, mismatches = 0;
  for (const auto& eta : etas) {
    const int p = static_cast<int>(eta.size());
    for (int l = p; l <= 5; ++l) {
      int combos = 1;
      for (int k = 0; k < l; ++k) combos *= 3;
      for (int code = 0; code < combos; ++code) {
        Eigen::MatrixXd h(p, l);
        int c = code;
        for (int k = 0; k < l; ++k, c /= 3) h.col(k).setConstant(std::pow(2.0, c % 3));
        if (adacast::allocate_subchannels(h, eta, 0.5) != greedy_oracle(h, eta, 0.5)) ++mismatches;
        ++instances;
      }
    }
  }
  return {instances, mismatches};
}

}  // namespace testing
