#pragma once

#include <vector>

#include "adacast/video_io.hpp"

namespace adacast {

struct FusionWeights {
  double texture = 1.0;      // alpha
  double saliency = 1.0;     // beta
  double interaction = 1.0;  // gamma_f, weight of the Q*S term
};

/// Per-block rate-control drivers for one frame. Q and S are normalized by
/// their maxima (or uniformly 1 when the maximum vanishes); O is the fusion.
struct ImportanceMap {
  std::vector<double> texture;     // Q
  std::vector<double> saliency;    // S
  std::vector<double> importance;  // O
  FusionWeights weights;
};

/// Sobel gradient magnitude with replicate padding.
Frame sobel_gradient_magnitude(const Frame& frame);

/// Mean Sobel magnitude over the frame.
double frame_complexity(const Frame& frame);

/// Mean of a per-pixel map over each B x B block, raster block order.
std::vector<double> block_mean_map(const Frame& values, int block_size);

/// Spectral-residual saliency, normalized to max 1. Flat input yields the
/// uniform map of ones.
Frame spectral_residual_saliency(const Frame& frame);

std::vector<double> fuse_importance(const std::vector<double>& texture,
                                    const std::vector<double>& saliency,
                                    const FusionWeights& weights);

/// Divides by the maximum; returns all ones when the maximum is below 1e-12.
std::vector<double> normalize_by_max(std::vector<double> values);

ImportanceMap compute_importance(const Frame& frame, int block_size, const FusionWeights& weights);

}  // namespace adacast
