#include "doctest.h"

#include <fstream>
#include <sstream>

#include "adacast/error.hpp"
#include "adacast/metrics.hpp"
#include "support.hpp"

using namespace adacast;

namespace {

Frame offset(Frame f, double d) {
  for (auto& v : f.plane) v += d;
  return f;
}

Frame with_noise(const Frame& f, double sigma, std::uint64_t seed) {
  RandomSource rng(seed);
  Frame out = f;
  for (auto& v : out.plane) v += sigma * rng.normal();
  return out;
}

RdCurve curve(const std::vector<double>& rates, const std::vector<double>& q) {
  RdCurve c;
  for (std::size_t k = 0; k < rates.size(); ++k) c.points.emplace_back(rates[k], q[k]);
  return c;
}

}  // namespace

TEST_CASE("PSNR") {
  const Frame a = testing::random_frame(16, 16, 1, 20, 200);
  CHECK(psnr(a, offset(a, 16)) == doctest::Approx(24.05).epsilon(0.0004));
  CHECK(std::abs(psnr(a, offset(a, 16)) - 24.05) < 0.01);
  CHECK(std::abs(psnr(a, offset(a, -1)) - 48.13) < 0.01);
  CHECK(psnr(a, a) == kPsnrCap);
  const Frame b = with_noise(a, 7, 3);
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK_THROWS_AS(psnr(a, Frame(8, 8)), Error);
}

TEST_CASE("MS-SSIM against the offline reference") {
  std::ifstream in(testing::data_path("msssim_expected.csv"));
  std::string line;
  std::getline(in, line);
  int pairs = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string id, w, h, kind, score;
    std::getline(ss, id, ',');
    std::getline(ss, w, ',');
    std::getline(ss, h, ',');
    std::getline(ss, kind, ',');
    std::getline(ss, score, ',');
    const int width = std::stoi(w), height = std::stoi(h);
    const auto ref = load_video(testing::data_path("msssim_" + id + "_ref.y"), width, height, 1, RawFormat::Y8);
    const auto test = load_video(testing::data_path("msssim_" + id + "_test.y"), width, height, 1, RawFormat::Y8);
    INFO(kind);
    CHECK(std::abs(ms_ssim(ref.frames[0], test.frames[0]) - std::stod(score)) < 1e-3);
    ++pairs;
  }
  CHECK(pairs == 5);
}

TEST_CASE("MS-SSIM properties") {
  const Frame a = synthesize_video(192, 192, 1, SynthPattern::TexturedNoisePan, 4).frames[0];
  CHECK(ms_ssim(a, a) == 1.0);
  double last = 1.0;
  for (double sigma : {2.0, 5.0, 10.0, 20.0, 40.0}) {
    const double s = ms_ssim(a, with_noise(a, sigma, 8));
    CHECK(s < last);
    last = s;
  }
  Frame shuffled = a;
  RandomSource rng(6);
  for (std::size_t k = shuffled.size() - 1; k > 0; --k)
    std::swap(shuffled.plane[k], shuffled.plane[static_cast<std::size_t>(rng.uniform() * (k + 1))]);
  CHECK(ms_ssim(a, shuffled) < 1.0);

  CHECK(ms_ssim_scales(192, 192) == 5);
  CHECK(ms_ssim_scales(128, 128) == 4);
  CHECK(ms_ssim_scales(11, 40) == 1);
  CHECK_THROWS_AS(ms_ssim(Frame(8, 8), Frame(8, 8)), Error);
}

TEST_CASE("sequence means") {
  VideoSequence a, b;
  a.frames = {Frame(16, 16, 10.0), Frame(16, 16, 10.0)};
  b.frames = {Frame(16, 16, 26.0), Frame(16, 16, 11.0)};
  CHECK(mean_psnr(a, b) == doctest::Approx((psnr(a.frames[0], b.frames[0]) + psnr(a.frames[1], b.frames[1])) / 2));
}

TEST_CASE("BD delta") {
  const std::vector<double> rates = {2e6, 3e6, 4e6, 5e6};
  const auto a = curve(rates, {18.79, 19.93, 20.32, 20.36});
  const auto b = curve(rates, {18.32, 19.41, 19.98, 20.04});
  CHECK(bd_psnr(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(bd_psnr(a, curve(rates, {19.79, 20.93, 21.32, 21.36})) - 1.0) < 1e-6);
  CHECK(std::abs(bd_psnr(a, b) + 0.45) < 0.01);
  CHECK(std::abs(bd_psnr(a, b) + 0.4564876509) < 1e-6);
  CHECK(std::abs(bd_psnr(a, b) + bd_psnr(b, a)) < 1e-9);

  // Partial overlap; value from an independent polynomial fit.
  const auto c = curve({1.5e6, 2.5e6, 3.5e6, 6e6}, {30, 31.5, 32.4, 34});
  CHECK(std::abs(bd_psnr(a, c) - 12.2572223087) < 1e-6);

  // Point order does not matter.
  CHECK(bd_psnr(curve({5e6, 2e6, 4e6, 3e6}, {20.36, 18.79, 20.32, 19.93}), b) == doctest::Approx(bd_psnr(a, b)));

  for (const auto& bad : {curve({1e3, 2e3, 3e3, 4e3}, {1, 2, 3, 4}), curve({2e6, 3e6, 4e6}, {1, 2, 3}),
                          curve({2e6, 2e6, 4e6, 5e6}, {1, 2, 3, 4})}) {
    try {
      bd_psnr(a, bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Range);
    }
  }
}
