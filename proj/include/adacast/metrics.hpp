#pragma once

#include <utility>
#include <vector>

#include "adacast/video_io.hpp"

namespace adacast {

constexpr double kPsnrCap = 99.0;

/// 10 log10(255^2 / MSE), capped at 99 dB.
double psnr(const Frame& reference, const Frame& test);

/// Five-scale MS-SSIM with an 11x11 Gaussian window (sigma 1.5), valid
/// filtering and 2x2 average downsampling. Frames too small for five scales
/// use as many as fit, with the exponents renormalized to sum to one.
/// Negative contrast-structure terms are clamped to zero.
double ms_ssim(const Frame& reference, const Frame& test);

/// Number of scales ms_ssim uses for a frame of this size.
int ms_ssim_scales(int width, int height);

double mean_psnr(const VideoSequence& reference, const VideoSequence& test);
double mean_ms_ssim(const VideoSequence& reference, const VideoSequence& test);

struct RdCurve {
  std::vector<std::pair<double, double>> points;  // (rate, quality)

  /// Sorts by rate and checks there are at least 4 distinct positive rates.
  void validate();
};

/// Bjontegaard delta: cubic fit of quality against log10(rate) for each
/// curve, mean of (b - a) over the shared log-rate interval.
double bd_quality(RdCurve a, RdCurve b);

inline double bd_psnr(const RdCurve& a, const RdCurve& b) { return bd_quality(a, b); }

}  // namespace adacast
