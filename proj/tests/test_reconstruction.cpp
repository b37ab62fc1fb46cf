#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "adacast/error.hpp"
#include "adacast/metrics.hpp"
#include "adacast/reconstruction.hpp"
#include "support.hpp"

using namespace adacast;

namespace {

double max_abs_diff(const Frame& a, const Frame& b) {
  double d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a.plane[k] - b.plane[k]));
  return d;
}

Eigen::VectorXd block_at(const Frame& f, int ox, int oy, int b) {
  Eigen::VectorXd v(b * b);
  for (int c = 0; c < b; ++c)
    for (int r = 0; r < b; ++r) v(c * b + r) = f.at(ox + c, oy + r);
  return v;
}

// Full SSE at every candidate in the clipped window, stable-sorted.
std::vector<int> brute_force_patches(const Eigen::VectorXd& block, int ox, int oy, const Frame& ref, int window,
                                     int count, int b) {
  const int cx = ox + b / 2, cy = oy + b / 2;
  const int x_lo = std::max(0, cx - window / 2), x_hi = std::min(ref.width - b, cx + window / 2 - b);
  const int y_lo = std::max(0, cy - window / 2), y_hi = std::min(ref.height - b, cy + window / 2 - b);
  std::vector<std::pair<double, int>> scored;
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x) scored.emplace_back((block_at(ref, x, y, b) - block).squaredNorm(), y * ref.width + x);
  std::stable_sort(scored.begin(), scored.end(), [](auto& a, auto& c) { return a.first < c.first; });
  std::vector<int> out;
  for (int k = 0; k < count && k < static_cast<int>(scored.size()); ++k) out.push_back(scored[k].second);
  return out;
}

Frame textured(int w, int h, std::uint64_t seed) {
  return synthesize_video(w, h, 1, SynthPattern::TexturedNoisePan, seed).frames[0];
}

struct Measured {
  SamplingMatrix phi;
  MeasurementSet set;
  BlockProjector projector;
};

Measured measure_uniform(const Frame& f, int m, std::uint64_t seed = 3) {
  SamplingMatrix phi(8, seed);
  const int blocks = (f.width / 8) * (f.height / 8);
  auto set = measure_frame(f, std::vector<int>(blocks, m), phi, 0, FrameKind::Intra);
  BlockProjector proj(observe_all(set), phi);
  return {phi, set, proj};
}

}  // namespace

TEST_CASE("adaptive Wiener filter matches the reference implementation") {
  for (std::string name : {"impulse", "random"}) {
    const Frame in = testing::frame_from_rows(testing::read_csv_numbers(testing::data_path("wiener_" + name + "_in.csv")));
    const Frame out = testing::frame_from_rows(testing::read_csv_numbers(testing::data_path("wiener_" + name + "_out.csv")));
    CHECK(max_abs_diff(wiener_smooth(in, 3), out) < 1e-9);
  }
  const Frame flat(16, 16, 77.0);
  CHECK(wiener_smooth(flat, 3) == flat);
}

TEST_CASE("DCT basis") {
  for (int b : {4, 8}) {
    const Eigen::MatrixXd d = dct_basis(b);
    CHECK((d.transpose() * d - Eigen::MatrixXd::Identity(b * b, b * b)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((d.col(0).array() - 1.0 / b).abs().maxCoeff() < 1e-12);
    // Atom with horizontal frequency 1 and no vertical variation.
    Eigen::VectorXd atom(b * b);
    for (int c = 0; c < b; ++c)
      for (int r = 0; r < b; ++r)
        atom(c * b + r) = std::sqrt(2.0 / b) * std::cos(std::numbers::pi * (2 * c + 1) / (2.0 * b)) / std::sqrt(b);
    double best = 0;
    for (int k = 1; k <= 2; ++k) best = std::max(best, std::abs(d.col(k).dot(atom)));
    CHECK(best == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("similar patch search matches brute force") {
  const Frame ref = testing::random_frame(48, 40, 8);
  RandomSource rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const int ox = 8 * static_cast<int>(rng.uniform() * 6), oy = 8 * static_cast<int>(rng.uniform() * 5);
    Eigen::VectorXd block = block_at(ref, ox, oy, 8);
    for (int k = 0; k < 64; ++k) block(k) += 20 * rng.normal();
    for (int window : {16, 24, 32})
      CHECK(find_similar_patches(block, ox, oy, ref, window, 10, 8) == brute_force_patches(block, ox, oy, ref, window, 10, 8));
  }
  // The block's own position wins on a noise-free copy.
  CHECK(find_similar_patches(block_at(ref, 16, 8, 8), 16, 8, ref, 32, 1, 8) == std::vector<int>{8 * 48 + 16});
  // Ties resolve to the lower scan index.
  const Frame flat(32, 32, 5.0);
  const auto tied = find_similar_patches(Eigen::VectorXd::Constant(64, 5.0), 8, 8, flat, 16, 3, 8);
  CHECK(tied == brute_force_patches(Eigen::VectorXd::Constant(64, 5.0), 8, 8, flat, 16, 3, 8));
  CHECK(std::is_sorted(tied.begin(), tied.end()));
}

TEST_CASE("PCA transform") {
  const Frame ref = testing::random_frame(32, 32, 4);

  const auto single = pca_transform({3 * 32 + 5}, ref, 8);
  Eigen::VectorXd w = block_at(ref, 5, 3, 8);
  w.array() -= w.mean();
  CHECK(std::abs(single.basis.col(0).dot(w / w.norm())) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_FALSE(single.fallback);

  const auto flat = pca_transform({0, 9, 33}, Frame(32, 32, 100.0), 8);
  CHECK(flat.fallback);
  CHECK(flat.basis == dct_basis(8));

  const auto many = build_adaptive_transform(block_at(ref, 8, 8, 8), 8, 8, ref, 32, 10, 8);
  REQUIRE(many.basis.rows() == 64);
  REQUIRE(many.basis.cols() == 64);
  CHECK((many.basis.transpose() * many.basis - Eigen::MatrixXd::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::is_sorted(many.eigenvalues.rbegin(), many.eigenvalues.rend()));
  CHECK(many.patches.size() == 10);

  // Leading eigenvalues agree with the covariance of the centred patches.
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(64, 64);
  for (int p : many.patches) {
    Eigen::VectorXd v = block_at(ref, p % 32, p / 32, 8);
    v.array() -= v.mean();
    z += v * v.transpose() / 10.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(z);
  for (int k = 0; k < 5; ++k) CHECK(many.eigenvalues[k] == doctest::Approx(solver.eigenvalues()(63 - k)).epsilon(1e-8));
}

TEST_CASE("noise estimate") {
  const auto a = estimate_noise_sigma({0, 0, 0, 10});
  CHECK(a.median == 0.0);
  CHECK(a.sigma == 0.0);
  const auto b = estimate_noise_sigma({1, 2, 3, 4});
  CHECK(b.median == 2.5);
  CHECK(b.sigma == doctest::Approx(1.0 / 0.6745));

  RandomSource rng(17);
  std::vector<double> v(100000);
  for (auto& x : v) x = rng.normal();
  CHECK(estimate_noise_sigma(v).sigma == doctest::Approx(1.0).epsilon(0.02));
  CHECK_THROWS_AS(estimate_noise_sigma({}), Error);
}

TEST_CASE("signal deviation over a neighbourhood") {
  // 3 x 3 blocks, one coefficient; the centre sees all nine.
  Eigen::MatrixXd c(1, 9);
  c << 1, 1, 1, 1, 3, 1, 1, 1, 3;
  CHECK(estimate_signal_variance(c, 3, 3, 1, 1, 0, 1.0, 3) == doctest::Approx(std::sqrt(25.0 / 9 - 1)));
  // Corner sees a 2 x 2 window: (9 + 1 + 1 + 9) / 4 = 5.
  c << 1, 1, 1, 1, 3, 1, 1, 1, 3;
  c(0, 0) = 3;
  CHECK(estimate_signal_variance(c, 3, 3, 0, 0, 0, 1.0, 3) == doctest::Approx(2.0));
  CHECK(estimate_signal_variance(c, 3, 3, 0, 0, 0, 10.0, 3) == 0.0);
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(5.0, 1.0, std::sqrt(2.0)) == doctest::Approx(4.0));
  CHECK(soft_threshold(-5.0, 1.0, std::sqrt(2.0)) == doctest::Approx(-4.0));
  CHECK(soft_threshold(0.5, 1.0, std::sqrt(2.0)) == 0.0);
  CHECK(soft_threshold(3.0, 0.0, 0.0) == 3.0);
  CHECK(soft_threshold(3.0, 1.0, 0.0) == 0.0);
  RandomSource rng(2);
  for (int k = 0; k < 500; ++k) {
    const double a = 10 * rng.normal(), b = 10 * rng.normal(), n = rng.uniform() * 3, s = 0.1 + rng.uniform() * 5;
    CHECK(std::abs(soft_threshold(a, n, s) - soft_threshold(b, n, s)) <= std::abs(a - b) + 1e-12);
    CHECK(std::abs(soft_threshold(a, n, s)) <= std::abs(a));
  }
}

TEST_CASE("BCS-SPL") {
  const Frame f = textured(64, 64, 5);
  ReconstructionParams params;

  const auto full = measure_uniform(f, 64);
  CHECK(max_abs_diff(bcs_spl(full.projector, 64, 64, 8, params), f) < 1e-6);

  const auto zero = measure_uniform(Frame(64, 64, 0.0), 20);
  for (double v : bcs_spl(zero.projector, 64, 64, 8, params).plane) CHECK(std::abs(v) < 1e-9);

  const auto half = measure_uniform(f, 32);
  ReconstructionTrace trace;
  const Frame rec = bcs_spl(half.projector, 64, 64, 8, params, &trace);
  const Frame back = untile_blocks({8, 8, 8, half.projector.back_projection()});
  CHECK(psnr(f, rec) > psnr(f, back) + 1.0);
  CHECK(trace.iterations >= 1);
  CHECK(trace.iterations <= params.max_iterations);
  CHECK(trace.errors.size() == static_cast<std::size_t>(trace.iterations));
  CHECK(half.projector.max_residual(tile_blocks(rec, 8).blocks) < 1e-8);
}

TEST_CASE("adaptive solver") {
  const Frame f = textured(64, 64, 9);
  ReconstructionParams params;
  params.max_iterations = 30;

  const auto full = measure_uniform(f, 64);
  CHECK(max_abs_diff(recon_frame(full.projector, f, 8, params), f) < 1e-6);

  // Static scene: the reference equals the frame being decoded.
  const auto low = measure_uniform(f, 12);
  ReconstructionTrace trace;
  const Frame adaptive = recon_frame(low.projector, f, 8, params, InitMode::BcsSpl, &trace);
  const Frame fixed = bcs_spl(low.projector, 64, 64, 8, params);
  CHECK(psnr(f, adaptive) > psnr(f, fixed) + 1.0);
  CHECK(low.projector.max_residual(tile_blocks(adaptive, 8).blocks) < 1e-8);
  CHECK(trace.transforms_built >= 64);
  CHECK(trace.transforms_built <= 64 * trace.iterations);

  CHECK(recon_frame(low.projector, f, 8, params) == adaptive);
  const Frame from_back = recon_frame(low.projector, f, 8, params, InitMode::BackProjection);
  CHECK(low.projector.max_residual(tile_blocks(from_back, 8).blocks) < 1e-8);

  ReconstructionParams bad = params;
  bad.similar_blocks = 0;
  CHECK_THROWS_AS(recon_frame(low.projector, f, 8, bad), Error);
  CHECK_THROWS_AS(recon_frame(low.projector, Frame(32, 32), 8, params), Error);
}

TEST_CASE("lifting residual measurements") {
  const Frame prev = textured(32, 32, 1);
  const Frame cur = textured(32, 32, 2);
  const SamplingMatrix phi(8, 4);
  const auto set = measure_frame(compute_residual(cur, prev), std::vector<int>(16, 20), phi, 1, FrameKind::Residual);
  const auto lifted = lift_observations(observe_all(set), prev, phi);
  const auto direct = observe_all(measure_frame(cur, std::vector<int>(16, 20), phi, 1, FrameKind::Intra));
  for (int j = 0; j < 16; ++j) {
    CHECK(lifted.blocks[j].rows == direct.blocks[j].rows);
    CHECK((lifted.blocks[j].values - direct.blocks[j].values).cwiseAbs().maxCoeff() < 1e-9);
  }
}
