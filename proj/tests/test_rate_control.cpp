#include "doctest.h"

#include <cmath>
#include <numeric>

#include "adacast/error.hpp"
#include "adacast/random.hpp"
#include "adacast/rate_control.hpp"

using namespace adacast;

namespace {

// Plain reading of the rule for instances where no entry reaches a bound:
// floor + round(share), then one unit to each of the |drift| heaviest
// (lower index first) or lightest (higher index first) entries.
std::vector<long long> reference_split(const std::vector<double>& w, long long total, long long floor) {
  const auto n = static_cast<long long>(w.size());
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<long long> out(n);
  for (long long i = 0; i < n; ++i) out[i] = floor + std::llround(w[i] / sum * static_cast<double>(total - n * floor));
  long long drift = total - std::accumulate(out.begin(), out.end(), 0LL);
  std::vector<long long> idx(n);
  std::iota(idx.begin(), idx.end(), 0LL);
  if (drift > 0) {
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return w[a] > w[b]; });
    for (long long k = 0; k < drift; ++k) ++out[idx[k]];
  } else if (drift < 0) {
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return w[a] != w[b] ? w[a] < w[b] : a > b; });
    for (long long k = 0; k < -drift; ++k) --out[idx[k]];
  }
  return out;
}

}  // namespace

TEST_CASE("frame budgets, hand traces") {
  CHECK(allocate_frame_rates({1, 3}, 200, 4, 10, 8) == std::vector<long long>{70, 130});
  CHECK(allocate_frame_rates({1, 1, 1}, 125, 4, 10, 8) == std::vector<long long>{42, 42, 41});
  CHECK(allocate_frame_rates({2, 2, 2, 2}, 160, 4, 10, 8) == std::vector<long long>{40, 40, 40, 40});
  CHECK(allocate_frame_rates({0, 5, 1}, 120, 4, 10, 8) == std::vector<long long>{40, 40, 40});
  CHECK(allocate_frame_rates({0, 0}, 100, 4, 10, 8) == std::vector<long long>{50, 50});
}

TEST_CASE("block budgets, hand traces") {
  CHECK(allocate_block_rates({1, 1}, 30, 10, 8) == std::vector<int>{15, 15});
  CHECK(allocate_block_rates({1, 1, 1}, 35, 10, 8) == std::vector<int>{12, 12, 11});
  CHECK(allocate_block_rates({2, 1}, 31, 10, 8) == std::vector<int>{17, 14});
}

TEST_CASE("ceiling clamps and redistributes") {
  // Block 0 alone would get 10 + 0.9*100 = 100 > 64.
  const auto m = allocate_block_rates({9, 0.5, 0.5}, 130, 10, 8);
  CHECK(m[0] == 64);
  CHECK(m[1] + m[2] == 66);
  CHECK(std::abs(m[1] - m[2]) <= 1);
}

TEST_CASE("infeasible budgets") {
  for (long long t : {39LL, 257LL}) {
    try {
      allocate_block_rates({1, 2, 3, 4}, t, 10, 8);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Budget);
    }
  }
  CHECK_THROWS_AS(allocate_frame_rates({1, 1}, 79, 4, 10, 8), Error);
  CHECK_THROWS_AS(allocate_frame_rates({1, 1}, 513, 4, 10, 8), Error);
}

TEST_CASE("exact sums and bounds on random instances") {
  RandomSource rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 40);
    const int b = rng.uniform() < 0.5 ? 4 : 8;
    const int floor = 1 + static_cast<int>(rng.uniform() * (b * b / 2));
    std::vector<double> w(n);
    for (auto& x : w) x = rng.uniform() < 0.2 ? 0.0 : rng.uniform() * 10;
    const long long lo = static_cast<long long>(n) * floor;
    const long long hi = static_cast<long long>(n) * b * b;
    const long long t = lo + static_cast<long long>(rng.uniform() * static_cast<double>(hi - lo + 1));
    const auto m = allocate_block_rates(w, t, floor, b);
    CHECK(std::accumulate(m.begin(), m.end(), 0LL) == t);
    for (int v : m) {
      CHECK(v >= floor);
      CHECK(v <= b * b);
    }
  }
}

TEST_CASE("matches the plain rule away from the bounds") {
  RandomSource rng(5);
  int compared = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 20);
    std::vector<double> w(n);
    for (auto& x : w) x = 0.1 + rng.uniform();
    const long long total = n * 10 + static_cast<long long>(rng.uniform() * n * 20);
    const auto expected = reference_split(w, total, 10);
    const auto [lo, hi] = std::minmax_element(expected.begin(), expected.end());
    if (*lo < 10 || *hi > 64) continue;
    CHECK(proportional_allocation(w, total, 10, 64) == expected);
    ++compared;
  }
  CHECK(compared > 1000);
}

TEST_CASE("uniform weights differ by at most one") {
  for (long long t = 40; t <= 256; t += 7) {
    const auto m = allocate_block_rates(std::vector<double>(4, 2.0), t, 10, 8);
    CHECK(*std::max_element(m.begin(), m.end()) - *std::min_element(m.begin(), m.end()) <= 1);
  }
}

TEST_CASE("larger weights never get fewer samples by more than one") {
  RandomSource rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> w(12);
    for (auto& x : w) x = rng.uniform();
    const auto m = allocate_block_rates(w, 12 * 10 + static_cast<long long>(rng.uniform() * 500), 10, 8);
    for (int a = 0; a < 12; ++a)
      for (int c = 0; c < 12; ++c)
        if (w[a] > w[c]) CHECK(m[a] - m[c] >= -1);
  }
}

TEST_CASE("overhead") {
  CHECK(overhead_samples(32, 256, 64) == 32 * 256 + 32 * 64);
}
