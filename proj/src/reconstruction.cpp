#include "adacast/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include "adacast/error.hpp"

namespace adacast {

namespace {

constexpr double kMadScale = 0.6745;
constexpr double kFlatTrace = 1e-9;
constexpr double kRelativeEigenFloor = 1e-10;

void check_params(const ReconstructionParams& params, int block_size) {
  if (params.max_iterations < 1) throw Error(ErrorKind::Config, "k_max must be at least 1");
  if (!(params.tolerance > 0.0)) throw Error(ErrorKind::Config, "tolerance must be positive");
  if (params.similar_blocks < 1) throw Error(ErrorKind::Config, "K must be at least 1");
  if (params.search_window < block_size) throw Error(ErrorKind::Config, "search window smaller than a block");
  if (params.neighborhood < 1) throw Error(ErrorKind::Config, "neighbourhood must be at least 1");
  if (params.wiener_window < 3 || params.wiener_window % 2 == 0)
    throw Error(ErrorKind::Config, "Wiener window must be odd and at least 3");
}

BlockGrid empty_grid(int width, int height, int block_size) {
  validate_block_dimensions(width, height, block_size);
  BlockGrid grid;
  grid.block_size = block_size;
  grid.blocks_x = width / block_size;
  grid.blocks_y = height / block_size;
  grid.blocks = Eigen::MatrixXd::Zero(block_size * block_size, grid.block_count());
  return grid;
}

double median_in_place(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

// Mean square of each coefficient over the neighbourhood of each block.
Eigen::MatrixXd neighbourhood_mean_square(const Eigen::MatrixXd& coefficients, int blocks_x, int blocks_y,
                                          int neighborhood) {
  const Eigen::MatrixXd squared = coefficients.array().square().matrix();
  Eigen::MatrixXd out(coefficients.rows(), coefficients.cols());
  const int lo = -(neighborhood - 1) / 2;
  const int hi = neighborhood / 2;
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(coefficients.rows());
      int members = 0;
      for (int dy = lo; dy <= hi; ++dy) {
        for (int dx = lo; dx <= hi; ++dx) {
          const int nx = bx + dx;
          const int ny = by + dy;
          if (nx < 0 || ny < 0 || nx >= blocks_x || ny >= blocks_y) continue;
          acc += squared.col(ny * blocks_x + nx);
          ++members;
        }
      }
      out.col(by * blocks_x + bx) = acc / members;
    }
  }
  return out;
}

// One smoothing / projection / shrinkage / projection pass per iteration.
template <typename Shrink>
Frame iterate(const BlockProjector& projector, BlockGrid estimate, const ReconstructionParams& params,
              ReconstructionTrace* trace, Shrink&& shrink) {
  double previous_error = 0.0;
  int k = 0;
  for (; k < params.max_iterations; ++k) {
    BlockGrid projected = tile_blocks(wiener_smooth(untile_blocks(estimate), params.wiener_window),
                                      estimate.block_size);
    projector.project(projected.blocks);
    Eigen::MatrixXd next = shrink(projected);
    projector.project(next);
    const double error = (next - projected.blocks).norm();
    estimate.blocks = std::move(next);
    if (trace) trace->errors.push_back(error);
    if (k > 0 && std::abs(error - previous_error) < params.tolerance) {
      ++k;
      break;
    }
    previous_error = error;
  }
  if (trace) trace->iterations = k;
  return untile_blocks(estimate);
}

}  // namespace

Frame wiener_smooth(const Frame& frame, int window) {
  if (window < 3 || window % 2 == 0) throw Error(ErrorKind::Config, "Wiener window must be odd and at least 3");
  const int half = window / 2;
  const double area = static_cast<double>(window) * window;
  Frame mean(frame.width, frame.height);
  Frame variance(frame.width, frame.height);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      double sum = 0.0;
      double sum_sq = 0.0;
      for (int dy = -half; dy <= half; ++dy) {
        const int yy = std::clamp(y + dy, 0, frame.height - 1);
        for (int dx = -half; dx <= half; ++dx) {
          const double v = frame.at(std::clamp(x + dx, 0, frame.width - 1), yy);
          sum += v;
          sum_sq += v * v;
        }
      }
      const double m = sum / area;
      mean.at(x, y) = m;
      variance.at(x, y) = std::max(0.0, sum_sq / area - m * m);
    }
  }
  double noise = 0.0;
  for (double v : variance.plane) noise += v;
  noise /= static_cast<double>(variance.size());

  Frame out(frame.width, frame.height);
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const double local = variance.plane[k];
    const double denom = std::max(local, noise);
    out.plane[k] = denom > 0.0
                       ? mean.plane[k] + std::max(0.0, local - noise) / denom * (frame.plane[k] - mean.plane[k])
                       : mean.plane[k];
  }
  return out;
}

Eigen::MatrixXd dct_basis(int block_size) {
  const int b = block_size;
  Eigen::MatrixXd c(b, b);
  for (int k = 0; k < b; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / b) : std::sqrt(2.0 / b);
    for (int n = 0; n < b; ++n) c(k, n) = alpha * std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * b));
  }
  std::vector<std::pair<int, int>> order;
  for (int u = 0; u < b; ++u)
    for (int v = 0; v < b; ++v) order.emplace_back(u, v);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& z) {
    return std::make_tuple(a.first + a.second, a.second) < std::make_tuple(z.first + z.second, z.second);
  });
  Eigen::MatrixXd basis(b * b, b * b);
  for (int atom = 0; atom < b * b; ++atom) {
    const auto [u, v] = order[atom];
    for (int col = 0; col < b; ++col)
      for (int row = 0; row < b; ++row) basis(col * b + row, atom) = c(u, col) * c(v, row);
  }
  return basis;
}

std::vector<int> find_similar_patches(const Eigen::VectorXd& block, int origin_x, int origin_y,
                                      const Frame& reference, int window, int count, int block_size) {
  const int b = block_size;
  const int centre_x = origin_x + b / 2;
  const int centre_y = origin_y + b / 2;
  const int x_lo = std::max(0, centre_x - window / 2);
  const int y_lo = std::max(0, centre_y - window / 2);
  const int x_hi = std::min(reference.width - b, centre_x + window / 2 - b);
  const int y_hi = std::min(reference.height - b, centre_y + window / 2 - b);

  // Scan order; a partial SSE at or above the K-th best stops early.
  std::vector<std::pair<double, int>> best;
  best.reserve(count + 1);
  const double* pixels = reference.plane.data();
  const std::size_t stride = reference.width;
  for (int py = y_lo; py <= y_hi; ++py) {
    for (int px = x_lo; px <= x_hi; ++px) {
      const bool full = static_cast<int>(best.size()) == count;
      const double bound = full ? best.back().first : std::numeric_limits<double>::infinity();
      double sse = 0.0;
      const double* row = pixels + static_cast<std::size_t>(py) * stride + px;
      for (int r = 0; r < b && sse < bound; ++r, row += stride)
        for (int c = 0; c < b; ++c) {
          const double d = row[c] - block(c * b + r);
          sse += d * d;
        }
      if (sse >= bound) continue;
      const std::pair<double, int> entry{sse, py * reference.width + px};
      best.insert(std::upper_bound(best.begin(), best.end(), entry), entry);
      if (static_cast<int>(best.size()) > count) best.pop_back();
    }
  }
  std::vector<int> positions;
  positions.reserve(best.size());
  for (const auto& e : best) positions.push_back(e.second);
  return positions;
}

AdaptiveTransform pca_transform(const std::vector<int>& patches, const Frame& reference, int block_size) {
  const int b = block_size;
  const int n = b * b;
  const int count = static_cast<int>(patches.size());
  AdaptiveTransform t;
  t.patches = patches;

  Eigen::MatrixXd centred(n, count);
  for (int k = 0; k < count; ++k) {
    const int px = patches[k] % reference.width;
    const int py = patches[k] / reference.width;
    for (int c = 0; c < b; ++c)
      for (int r = 0; r < b; ++r) centred(c * b + r, k) = reference.at(px + c, py + r);
    centred.col(k).array() -= centred.col(k).mean();
  }

  const double trace = count > 0 ? centred.squaredNorm() / count : 0.0;
  const Eigen::MatrixXd dct = dct_basis(b);
  if (trace < kFlatTrace) {
    t.basis = dct;
    t.eigenvalues.assign(n, 0.0);
    t.fallback = true;
    return t;
  }

  // Nonzero spectrum of Z = W W^T / K from the K x K Gram matrix.
  const Eigen::MatrixXd gram = centred.transpose() * centred / count;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  const Eigen::VectorXd values = solver.eigenvalues();
  const Eigen::MatrixXd vectors = solver.eigenvectors();
  const double top = values(count - 1);

  Eigen::MatrixXd basis(n, n);
  int filled = 0;
  for (int k = count - 1; k >= 0 && filled < n; --k) {
    if (values(k) <= kRelativeEigenFloor * top) break;
    Eigen::VectorXd u = centred * vectors.col(k) / std::sqrt(count * values(k));
    for (int q = 0; q < filled; ++q) u -= basis.col(q).dot(u) * basis.col(q);
    const double norm = u.norm();
    if (norm < 1e-6) continue;
    basis.col(filled++) = u / norm;
    t.eigenvalues.push_back(values(k));
  }

  // Zero-eigenvalue eigenspace: DCT atoms in frequency order, projected off
  // the principal directions.
  for (int atom = 0; atom < n && filled < n; ++atom) {
    Eigen::VectorXd v = dct.col(atom);
    for (int pass = 0; pass < 2; ++pass)
      v -= basis.leftCols(filled) * (basis.leftCols(filled).transpose() * v);
    const double norm = v.norm();
    if (norm < 1e-6) continue;
    basis.col(filled++) = v / norm;
    t.eigenvalues.push_back(0.0);
  }
  t.basis = std::move(basis);
  return t;
}

AdaptiveTransform build_adaptive_transform(const Eigen::VectorXd& block, int origin_x, int origin_y,
                                           const Frame& reference, int window, int count, int block_size) {
  return pca_transform(find_similar_patches(block, origin_x, origin_y, reference, window, count, block_size),
                       reference, block_size);
}

NoiseEstimate estimate_noise_sigma(std::vector<double> coefficients) {
  if (coefficients.empty()) throw Error(ErrorKind::Config, "noise estimate needs at least one coefficient");
  NoiseEstimate est;
  est.median = median_in_place(coefficients);
  for (auto& v : coefficients) v = std::abs(v - est.median);
  est.sigma = median_in_place(coefficients) / kMadScale;
  return est;
}

double estimate_signal_variance(const Eigen::MatrixXd& coefficients, int blocks_x, int blocks_y,
                                int bx, int by, int index, double noise_sigma, int neighborhood) {
  const int lo = -(neighborhood - 1) / 2;
  const int hi = neighborhood / 2;
  double sum = 0.0;
  int members = 0;
  for (int dy = lo; dy <= hi; ++dy) {
    for (int dx = lo; dx <= hi; ++dx) {
      const int nx = bx + dx;
      const int ny = by + dy;
      if (nx < 0 || ny < 0 || nx >= blocks_x || ny >= blocks_y) continue;
      const double v = coefficients(index, ny * blocks_x + nx);
      sum += v * v;
      ++members;
    }
  }
  return std::sqrt(std::max(0.0, sum / members - noise_sigma * noise_sigma));
}

double soft_threshold(double value, double noise_sigma, double signal_sigma) {
  if (noise_sigma == 0.0) return value;
  if (signal_sigma <= 0.0) return 0.0;
  const double threshold = std::numbers::sqrt2 * noise_sigma * noise_sigma / signal_sigma;
  const double magnitude = std::max(0.0, std::abs(value) - threshold);
  return value < 0.0 ? -magnitude : magnitude;
}

Frame bcs_spl(const BlockProjector& projector, int width, int height, int block_size,
              const ReconstructionParams& params, ReconstructionTrace* trace, const Frame* initial) {
  check_params(params, block_size);
  BlockGrid estimate = empty_grid(width, height, block_size);
  if (projector.block_count() != estimate.block_count())
    throw Error(ErrorKind::Dimension, "projector and frame disagree on block count");
  estimate.blocks = initial ? tile_blocks(*initial, block_size).blocks : projector.back_projection();

  const Eigen::MatrixXd dct = dct_basis(block_size);
  const double universal = std::sqrt(2.0 * std::log(static_cast<double>(estimate.blocks.size())));
  return iterate(projector, std::move(estimate), params, trace, [&](const BlockGrid& projected) {
    Eigen::MatrixXd coeffs = dct.transpose() * projected.blocks;
    const auto noise = estimate_noise_sigma({coeffs.data(), coeffs.data() + coeffs.size()});
    const double threshold = noise.sigma * universal;
    coeffs = (coeffs.array().abs() > threshold).select(coeffs, 0.0);
    return Eigen::MatrixXd(dct * coeffs);
  });
}

Frame recon_frame(const BlockProjector& projector, const Frame& reference, int block_size,
                  const ReconstructionParams& params, InitMode init, ReconstructionTrace* trace,
                  const Frame* initial) {
  check_params(params, block_size);
  BlockGrid estimate = empty_grid(reference.width, reference.height, block_size);
  if (projector.block_count() != estimate.block_count())
    throw Error(ErrorKind::Dimension, "projector and reference frame disagree on block count");
  if (initial) {
    estimate.blocks = tile_blocks(*initial, block_size).blocks;
  } else if (init == InitMode::BcsSpl) {
    estimate.blocks = tile_blocks(bcs_spl(projector, reference.width, reference.height, block_size, params),
                                  block_size).blocks;
  } else {
    estimate.blocks = projector.back_projection();
  }

  const int blocks_x = estimate.blocks_x;
  const int blocks_y = estimate.blocks_y;
  const int n = block_size * block_size;
  std::vector<AdaptiveTransform> transforms(estimate.block_count());

  return iterate(projector, std::move(estimate), params, trace, [&](const BlockGrid& projected) {
    const int m = projected.block_count();
    Eigen::MatrixXd coeffs(n, m);
    for (int j = 0; j < m; ++j) {
      const int ox = (j % blocks_x) * block_size;
      const int oy = (j / blocks_x) * block_size;
      auto patches = find_similar_patches(projected.blocks.col(j), ox, oy, reference, params.search_window,
                                          params.similar_blocks, block_size);
      if (transforms[j].basis.size() == 0 || patches != transforms[j].patches) {
        transforms[j] = pca_transform(patches, reference, block_size);
        if (trace) ++trace->transforms_built;
      }
      coeffs.col(j).noalias() = transforms[j].basis.transpose() * projected.blocks.col(j);
    }

    const auto noise = estimate_noise_sigma({coeffs.data(), coeffs.data() + coeffs.size()});
    const Eigen::MatrixXd mean_square = neighbourhood_mean_square(coeffs, blocks_x, blocks_y, params.neighborhood);
    const double noise_var = noise.sigma * noise.sigma;
    Eigen::MatrixXd shrunk(n, m);
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd v(n);
      for (int c = 0; c < n; ++c) {
        const double signal = std::sqrt(std::max(0.0, mean_square(c, j) - noise_var));
        v(c) = soft_threshold(coeffs(c, j), noise.sigma, signal);
      }
      shrunk.col(j).noalias() = transforms[j].basis * v;
    }
    return shrunk;
  });
}

FrameObservations lift_observations(const FrameObservations& residual, const Frame& reference,
                                    const SamplingMatrix& phi) {
  const BlockGrid grid = tile_blocks(reference, residual.block_size);
  if (static_cast<int>(residual.blocks.size()) != grid.block_count())
    throw Error(ErrorKind::Dimension, "reference frame does not match the observations");
  FrameObservations lifted = residual;
  for (int j = 0; j < grid.block_count(); ++j) {
    auto& b = lifted.blocks[j];
    for (std::size_t r = 0; r < b.rows.size(); ++r)
      b.values(static_cast<Eigen::Index>(r)) += phi.matrix().row(b.rows[r]).dot(grid.blocks.col(j));
  }
  return lifted;
}

}  // namespace adacast
