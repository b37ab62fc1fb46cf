#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adacast/bcs_codec.hpp"
#include "adacast/video_io.hpp"

namespace adacast {

struct ReconstructionParams {
  int max_iterations = 100;  // k_max
  double tolerance = 1e-6;   // stop when |e_k - e_{k-1}| < tolerance
  int search_window = 32;    // S
  int similar_blocks = 10;   // K
  int neighborhood = 3;      // side of the block neighbourhood; gamma = side^2 in the interior
  int wiener_window = 3;
};

enum class InitMode {
  BcsSpl,          // run the fixed-transform solver first
  BackProjection,  // Phi_j^T y_j
};

struct ReconstructionTrace {
  std::vector<double> errors;  // e_k per iteration
  int iterations = 0;
  int transforms_built = 0;    // PCA bases computed (cache misses)
};

/// Adaptive (local-statistics) Wiener filter over a w x w window with
/// replicate padding; the noise power is the mean local variance.
Frame wiener_smooth(const Frame& frame, int window);

/// Orthonormal 2-D DCT atoms as columns, matching the column-major block
/// vectorization. Ordered by ascending u+v (DC first).
Eigen::MatrixXd dct_basis(int block_size);

/// Orthonormal basis (atoms as columns). Analysis is basis^T x.
struct AdaptiveTransform {
  Eigen::MatrixXd basis;
  std::vector<double> eigenvalues;  // descending, one per column
  std::vector<int> patches;         // scan positions (y * W + x) of the K patches
  bool fallback = false;            // flat patches, DCT basis
};

/// Top-left corners of the K reference patches closest in MSE to `block`
/// inside the S x S window centred on the block, clipped to the frame.
/// Ties go to the lower scan index.
std::vector<int> find_similar_patches(const Eigen::VectorXd& block, int origin_x, int origin_y,
                                      const Frame& reference, int window, int count, int block_size);

/// PCA basis of the mean-centred patches: eigenvectors of their covariance
/// by descending eigenvalue; the null space is completed from DCT atoms in
/// frequency order. Falls back to the DCT basis when trace(Z) < 1e-9.
AdaptiveTransform pca_transform(const std::vector<int>& patches, const Frame& reference, int block_size);

AdaptiveTransform build_adaptive_transform(const Eigen::VectorXd& block, int origin_x, int origin_y,
                                           const Frame& reference, int window, int count, int block_size);

struct NoiseEstimate {
  double median = 0.0;  // nu
  double sigma = 0.0;   // sigma_n
};

/// nu = median, sigma_n = median(|v - nu|) / 0.6745. Even counts average the
/// two middle order statistics.
NoiseEstimate estimate_noise_sigma(std::vector<double> coefficients);

/// ML signal deviation for coefficient `index` of block (bx, by): mean square
/// of that coefficient over the neighbourhood of blocks minus sigma_n^2,
/// floored at 0. `coefficients` holds one column per block in raster order.
double estimate_signal_variance(const Eigen::MatrixXd& coefficients, int blocks_x, int blocks_y,
                                int bx, int by, int index, double noise_sigma, int neighborhood);

/// sgn(v) max(0, |v| - sqrt(2) sigma_n^2 / sigma). sigma_n = 0 keeps v;
/// otherwise sigma = 0 zeroes it.
double soft_threshold(double value, double noise_sigma, double signal_sigma);

/// Fixed-transform solver: smoothing, projection, block DCT with hard
/// threshold sigma sqrt(2 ln n), inverse, projection.
Frame bcs_spl(const BlockProjector& projector, int width, int height, int block_size,
              const ReconstructionParams& params, ReconstructionTrace* trace = nullptr,
              const Frame* initial = nullptr);

/// Adaptive-transform solver: per-block PCA bases from `reference`, MAP soft
/// shrinkage with global MAD noise and neighbourhood ML signal variance.
/// `initial` overrides the initializer chosen by `init`.
Frame recon_frame(const BlockProjector& projector, const Frame& reference, int block_size,
                  const ReconstructionParams& params, InitMode init = InitMode::BcsSpl,
                  ReconstructionTrace* trace = nullptr, const Frame* initial = nullptr);

/// y_j + Phi_j (block j of `reference`) for every block: residual
/// measurements become measurements of reference + residual.
FrameObservations lift_observations(const FrameObservations& residual, const Frame& reference,
                                    const SamplingMatrix& phi);

}  // namespace adacast
