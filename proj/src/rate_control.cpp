#include "adacast/rate_control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adacast/error.hpp"

namespace adacast {

long long overhead_samples(int frame_count, int block_count, int packet_count) {
  return static_cast<long long>(frame_count) * block_count +
         static_cast<long long>(frame_count) * packet_count;
}

std::vector<long long> proportional_allocation(const std::vector<double>& weights, long long total,
                                               long long floor, long long ceiling) {
  const auto n = static_cast<long long>(weights.size());
  if (n == 0) throw Error(ErrorKind::Budget, "nothing to allocate to");
  if (total < n * floor || total > n * ceiling) {
    throw Error(ErrorKind::Budget, "budget " + std::to_string(total) + " outside [" +
                                       std::to_string(n * floor) + ", " +
                                       std::to_string(n * ceiling) + "]");
  }
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::Budget, "weights must be finite and nonnegative");

  std::vector<double> w = weights;
  if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) std::fill(w.begin(), w.end(), 1.0);

  std::vector<long long> share(n, floor);
  std::vector<bool> pinned(n, false);
  for (;;) {
    long long extra = total - n * floor;
    double pool = 0.0;
    for (long long i = 0; i < n; ++i) {
      if (pinned[i]) extra -= ceiling - floor;
      else pool += w[i];
    }
    bool overflowed = false;
    for (long long i = 0; i < n; ++i) {
      if (pinned[i]) continue;
      const double portion = pool > 0.0 ? w[i] / pool * static_cast<double>(extra) : 0.0;
      share[i] = floor + std::llround(portion);
      if (share[i] > ceiling) {
        pinned[i] = true;
        share[i] = ceiling;
        overflowed = true;
      }
    }
    if (!overflowed) break;
  }

  long long drift = total - std::accumulate(share.begin(), share.end(), 0LL);
  if (drift == 0) return share;

  std::vector<long long> order(n);
  std::iota(order.begin(), order.end(), 0LL);
  if (drift > 0) {
    std::stable_sort(order.begin(), order.end(), [&](long long a, long long b) { return w[a] > w[b]; });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](long long a, long long b) {
      return w[a] != w[b] ? w[a] < w[b] : a > b;
    });
  }
  // Usually a single pass; repeated only when bounds block candidates.
  while (drift != 0) {
    for (long long i : order) {
      if (drift > 0 && share[i] < ceiling) {
        ++share[i];
        --drift;
      } else if (drift < 0 && share[i] > floor) {
        --share[i];
        ++drift;
      }
      if (drift == 0) break;
    }
  }
  return share;
}

std::vector<long long> allocate_frame_rates(const std::vector<double>& complexity, long long data_budget,
                                            int block_count, int min_per_block, int block_size) {
  if (block_count < 1 || min_per_block < 1 || min_per_block > block_size * block_size)
    throw Error(ErrorKind::Config, "invalid block count or per-block floor");
  const long long frame_floor = static_cast<long long>(block_count) * min_per_block;
  const long long frame_ceiling = static_cast<long long>(block_count) * block_size * block_size;
  return proportional_allocation(complexity, data_budget, frame_floor, frame_ceiling);
}

std::vector<int> allocate_block_rates(const std::vector<double>& importance, long long frame_budget,
                                      int min_per_block, int block_size) {
  if (min_per_block < 1 || min_per_block > block_size * block_size)
    throw Error(ErrorKind::Config, "per-block floor outside [1, B^2]");
  const auto shares = proportional_allocation(importance, frame_budget, min_per_block,
                                              static_cast<long long>(block_size) * block_size);
  return {shares.begin(), shares.end()};
}

}  // namespace adacast
