#include "adacast/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "adacast/error.hpp"

namespace adacast {

namespace {

constexpr std::array<double, 5> kScaleWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

void require_same_shape(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error(ErrorKind::Dimension, "frames differ in size");
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int k = 0; k < kWindow; ++k) {
    const double d = k - kWindow / 2;
    taps[k] = std::exp(-d * d / (2 * kWindowSigma * kWindowSigma));
    sum += taps[k];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

// Separable Gaussian, valid region only.
Frame filter_valid(const Frame& in) {
  static const auto taps = gaussian_taps();
  const int w = in.width - kWindow + 1;
  const int h = in.height - kWindow + 1;
  Frame rows(w, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * in.at(x + k, y);
      rows.at(x, y) = s;
    }
  Frame out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * rows.at(x, y + k);
      out.at(x, y) = s;
    }
  return out;
}

Frame product(const Frame& a, const Frame& b) {
  Frame out(a.width, a.height);
  for (std::size_t k = 0; k < a.size(); ++k) out.plane[k] = a.plane[k] * b.plane[k];
  return out;
}

// 2x2 average; odd sizes repeat the last row/column first.
Frame downsample(const Frame& in) {
  const int w = (in.width + 1) / 2;
  const int h = (in.height + 1) / 2;
  Frame out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          s += in.at(std::min(2 * x + dx, in.width - 1), std::min(2 * y + dy, in.height - 1));
      out.at(x, y) = s / 4.0;
    }
  return out;
}

// Mean luminance and contrast-structure terms at one scale.
std::pair<double, double> ssim_terms(const Frame& a, const Frame& b) {
  const Frame mu_a = filter_valid(a);
  const Frame mu_b = filter_valid(b);
  const Frame aa = filter_valid(product(a, a));
  const Frame bb = filter_valid(product(b, b));
  const Frame ab = filter_valid(product(a, b));
  double lum = 0.0;
  double cs = 0.0;
  for (std::size_t k = 0; k < mu_a.size(); ++k) {
    const double ma = mu_a.plane[k];
    const double mb = mu_b.plane[k];
    const double va = aa.plane[k] - ma * ma;
    const double vb = bb.plane[k] - mb * mb;
    const double cov = ab.plane[k] - ma * mb;
    lum += (2 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
    cs += (2 * cov + kC2) / (va + vb + kC2);
  }
  const double n = static_cast<double>(mu_a.size());
  return {lum / n, cs / n};
}

Eigen::Vector4d cubic_fit(const std::vector<std::pair<double, double>>& points) {
  Eigen::MatrixXd a(points.size(), 4);
  Eigen::VectorXd y(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = std::log10(points[i].first);
    a.row(i) << 1.0, x, x * x, x * x * x;
    y(i) = points[i].second;
  }
  return a.colPivHouseholderQr().solve(y);
}

double cubic_integral(const Eigen::Vector4d& c, double lo, double hi) {
  auto antiderivative = [&](double x) {
    return c(0) * x + c(1) * x * x / 2 + c(2) * x * x * x / 3 + c(3) * x * x * x * x / 4;
  };
  return antiderivative(hi) - antiderivative(lo);
}

}  // namespace

double psnr(const Frame& reference, const Frame& test) {
  require_same_shape(reference, test);
  if (reference.size() == 0) throw Error(ErrorKind::Dimension, "empty frame");
  double sse = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const double d = reference.plane[k] - test.plane[k];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(reference.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

int ms_ssim_scales(int width, int height) {
  int scales = 0;
  int side = std::min(width, height);
  while (scales < static_cast<int>(kScaleWeights.size()) && side >= kWindow) {
    ++scales;
    side = (side + 1) / 2;
  }
  return scales;
}

double ms_ssim(const Frame& reference, const Frame& test) {
  require_same_shape(reference, test);
  const int scales = ms_ssim_scales(reference.width, reference.height);
  if (scales == 0) throw Error(ErrorKind::Dimension, "frame smaller than the 11x11 window");
  double weight_sum = 0.0;
  for (int s = 0; s < scales; ++s) weight_sum += kScaleWeights[s];

  Frame a = reference;
  Frame b = test;
  double score = 1.0;
  for (int s = 0; s < scales; ++s) {
    const auto [lum, cs] = ssim_terms(a, b);
    const double weight = kScaleWeights[s] / weight_sum;
    const double term = s + 1 == scales ? lum * cs : cs;
    score *= std::pow(std::max(0.0, term), weight);
    if (s + 1 < scales) {
      a = downsample(a);
      b = downsample(b);
    }
  }
  return score;
}

double mean_psnr(const VideoSequence& reference, const VideoSequence& test) {
  if (reference.frame_count() != test.frame_count() || reference.frame_count() == 0)
    throw Error(ErrorKind::Dimension, "sequences differ in length");
  double sum = 0.0;
  for (int i = 0; i < reference.frame_count(); ++i) sum += psnr(reference.frames[i], test.frames[i]);
  return sum / reference.frame_count();
}

double mean_ms_ssim(const VideoSequence& reference, const VideoSequence& test) {
  if (reference.frame_count() != test.frame_count() || reference.frame_count() == 0)
    throw Error(ErrorKind::Dimension, "sequences differ in length");
  double sum = 0.0;
  for (int i = 0; i < reference.frame_count(); ++i) sum += ms_ssim(reference.frames[i], test.frames[i]);
  return sum / reference.frame_count();
}

void RdCurve::validate() {
  std::sort(points.begin(), points.end());
  if (points.size() < 4) throw Error(ErrorKind::Range, "RD curve needs at least 4 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0.0)) throw Error(ErrorKind::Range, "RD curve rates must be positive");
    if (i > 0 && points[i].first == points[i - 1].first)
      throw Error(ErrorKind::Range, "RD curve has repeated rates");
  }
}

double bd_quality(RdCurve a, RdCurve b) {
  a.validate();
  b.validate();
  const double lo = std::max(std::log10(a.points.front().first), std::log10(b.points.front().first));
  const double hi = std::min(std::log10(a.points.back().first), std::log10(b.points.back().first));
  if (!(hi > lo)) throw Error(ErrorKind::Range, "RD curves do not overlap in rate");
  const auto ca = cubic_fit(a.points);
  const auto cb = cubic_fit(b.points);
  return (cubic_integral(cb, lo, hi) - cubic_integral(ca, lo, hi)) / (hi - lo);
}

}  // namespace adacast
