#include "adacast/importance.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>

#include <fftw3.h>

#include "adacast/error.hpp"

namespace adacast {

namespace {

constexpr int kSaliencyScale = 64;
constexpr double kLogFloor = 1e-8;
constexpr double kBlurSigma = 2.5;
constexpr int kBlurTaps = 9;
constexpr double kDegenerateMax = 1e-12;

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double sample_replicate(const Frame& f, int x, int y) {
  return f.at(std::clamp(x, 0, f.width - 1), std::clamp(y, 0, f.height - 1));
}

Frame resize_bilinear(const Frame& src, int width, int height) {
  Frame dst(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double tx = fx - x0;
      const double top = src.at(x0, y0) * (1 - tx) + src.at(x1, y0) * tx;
      const double bottom = src.at(x0, y1) * (1 - tx) + src.at(x1, y1) * tx;
      dst.at(x, y) = top * (1 - ty) + bottom * ty;
    }
  }
  return dst;
}

Frame separable_filter(const Frame& src, const std::vector<double>& taps) {
  const int half = static_cast<int>(taps.size()) / 2;
  Frame tmp(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) acc += taps[k + half] * sample_replicate(src, x + k, y);
      tmp.at(x, y) = acc;
    }
  Frame out(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) acc += taps[k + half] * sample_replicate(tmp, x, y + k);
      out.at(x, y) = acc;
    }
  return out;
}

std::vector<double> gaussian_taps(int taps, double sigma) {
  std::vector<double> w(taps);
  const int half = taps / 2;
  for (int k = -half; k <= half; ++k) w[k + half] = std::exp(-(k * k) / (2 * sigma * sigma));
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= sum;
  return w;
}

void fft2d(std::vector<std::complex<double>>& data, int width, int height, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(height, width, buf, buf, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

Frame sobel_gradient_magnitude(const Frame& frame) {
  Frame grad(frame.width, frame.height);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const auto p = [&](int dx, int dy) { return sample_replicate(frame, x + dx, y + dy); };
      const double gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      const double gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      grad.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return grad;
}

double frame_complexity(const Frame& frame) {
  const Frame grad = sobel_gradient_magnitude(frame);
  return std::accumulate(grad.plane.begin(), grad.plane.end(), 0.0) / static_cast<double>(grad.size());
}

std::vector<double> block_mean_map(const Frame& values, int block_size) {
  validate_block_dimensions(values.width, values.height, block_size);
  const int bx_count = values.width / block_size;
  const int by_count = values.height / block_size;
  std::vector<double> means(static_cast<std::size_t>(bx_count) * by_count, 0.0);
  for (int y = 0; y < values.height; ++y)
    for (int x = 0; x < values.width; ++x)
      means[(y / block_size) * bx_count + x / block_size] += values.at(x, y);
  const double area = static_cast<double>(block_size) * block_size;
  for (auto& m : means) m /= area;
  return means;
}

Frame spectral_residual_saliency(const Frame& frame) {
  const double scale = static_cast<double>(kSaliencyScale) / std::max(frame.width, frame.height);
  const int sw = std::max(1, static_cast<int>(std::lround(frame.width * scale)));
  const int sh = std::max(1, static_cast<int>(std::lround(frame.height * scale)));
  const Frame small = resize_bilinear(frame, sw, sh);

  // A flat image has no spectrum outside DC; its residual map is an artifact.
  const auto [lo, hi] = std::minmax_element(small.plane.begin(), small.plane.end());
  if (*hi - *lo < kDegenerateMax) return Frame(frame.width, frame.height, 1.0);

  std::vector<std::complex<double>> spectrum(small.size());
  for (std::size_t k = 0; k < small.size(); ++k) spectrum[k] = small.plane[k];
  fft2d(spectrum, sw, sh, FFTW_FORWARD);

  Frame log_amplitude(sw, sh);
  std::vector<double> phase(small.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    log_amplitude.plane[k] = std::log(std::abs(spectrum[k]) + kLogFloor);
    phase[k] = std::arg(spectrum[k]);
  }
  const Frame averaged = separable_filter(log_amplitude, std::vector<double>(3, 1.0 / 3.0));
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double residual = log_amplitude.plane[k] - averaged.plane[k];
    spectrum[k] = std::polar(std::exp(residual), phase[k]);
  }
  fft2d(spectrum, sw, sh, FFTW_BACKWARD);

  Frame energy(sw, sh);
  for (std::size_t k = 0; k < spectrum.size(); ++k) energy.plane[k] = std::norm(spectrum[k]);
  const Frame blurred = separable_filter(energy, gaussian_taps(kBlurTaps, kBlurSigma));
  Frame saliency = resize_bilinear(blurred, frame.width, frame.height);

  const double peak = *std::max_element(saliency.plane.begin(), saliency.plane.end());
  if (peak < kDegenerateMax) return Frame(frame.width, frame.height, 1.0);
  for (auto& v : saliency.plane) v = std::max(0.0, v / peak);
  return saliency;
}

std::vector<double> fuse_importance(const std::vector<double>& texture,
                                    const std::vector<double>& saliency,
                                    const FusionWeights& weights) {
  if (texture.size() != saliency.size())
    throw Error(ErrorKind::Dimension, "texture and saliency maps differ in block count");
  if (weights.texture < 0 || weights.saliency < 0 || weights.interaction < 0)
    throw Error(ErrorKind::Config, "fusion weights must be nonnegative");
  if (weights.texture == 0 && weights.saliency == 0 && weights.interaction == 0)
    throw Error(ErrorKind::Config, "all fusion weights are zero");
  std::vector<double> fused(texture.size());
  for (std::size_t j = 0; j < fused.size(); ++j) {
    fused[j] = weights.texture * texture[j] + weights.saliency * saliency[j] +
               weights.interaction * texture[j] * saliency[j];
  }
  return fused;
}

std::vector<double> normalize_by_max(std::vector<double> values) {
  const double peak = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  if (peak < kDegenerateMax) {
    std::fill(values.begin(), values.end(), 1.0);
    return values;
  }
  for (auto& v : values) v /= peak;
  return values;
}

ImportanceMap compute_importance(const Frame& frame, int block_size, const FusionWeights& weights) {
  ImportanceMap map;
  map.weights = weights;
  map.texture = normalize_by_max(block_mean_map(sobel_gradient_magnitude(frame), block_size));
  map.saliency = normalize_by_max(block_mean_map(spectral_residual_saliency(frame), block_size));
  map.importance = fuse_importance(map.texture, map.saliency, weights);
  return map;
}

}  // namespace adacast
