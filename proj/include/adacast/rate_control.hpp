#pragma once

#include <vector>

namespace adacast {

struct RateBudget {
  long long total = 0;     // T_tot
  long long overhead = 0;  // T_h
  long long data = 0;      // T_d = T_tot - T_h
  int min_per_block = 10;  // m_min
  std::vector<long long> per_frame;         // T_i
  std::vector<std::vector<int>> per_block;  // m_j for each frame
};

/// Metadata charge in sample-equivalents: one count per block and one gain
/// per packet, for every frame.
long long overhead_samples(int frame_count, int block_count, int packet_count);

/// Splits `total` into `weights.size()` integer shares, each in
/// [floor, ceiling], proportional to the weights above the floor. Shares that
/// would exceed the ceiling are pinned and the rest re-split; rounding drift
/// is then corrected one unit at a time (additions go to the heaviest
/// weights, lower index first; removals to the lightest, higher index first).
/// Zero total weight means uniform weights. The result sums to `total`.
std::vector<long long> proportional_allocation(const std::vector<double>& weights, long long total,
                                               long long floor, long long ceiling);

/// Per-frame budgets T_i from frame complexities. Throws a budget error when
/// T_d lies outside [N*M*m_min, N*M*B^2].
std::vector<long long> allocate_frame_rates(const std::vector<double>& complexity, long long data_budget,
                                            int block_count, int min_per_block, int block_size);

/// Per-block sample counts m_j from block importances.
std::vector<int> allocate_block_rates(const std::vector<double>& importance, long long frame_budget,
                                      int min_per_block, int block_size);

}  // namespace adacast
