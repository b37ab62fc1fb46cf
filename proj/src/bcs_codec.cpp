#include "adacast/bcs_codec.hpp"

#include <algorithm>
#include <string>

#include "adacast/error.hpp"
#include "adacast/random.hpp"

namespace adacast {

SamplingMatrix::SamplingMatrix(int block_size, std::uint64_t seed)
    : block_size_(block_size), seed_(seed) {
  if (block_size < 2) throw Error(ErrorKind::Config, "block size must be at least 2");
  const int n = block_size * block_size;
  matrix_.resize(n, n);
  RandomSource rng(seed);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) matrix_(r, c) = rng.normal();

  // Modified Gram-Schmidt over rows in order, two passes.
  for (int r = 0; r < n; ++r) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int q = 0; q < r; ++q) {
        const double dot = matrix_.row(r).dot(matrix_.row(q));
        matrix_.row(r) -= dot * matrix_.row(q);
      }
    }
    const double norm = matrix_.row(r).norm();
    if (norm < 1e-8) throw Error(ErrorKind::Config, "degenerate Gaussian draw for seed " + std::to_string(seed));
    matrix_.row(r) /= norm;
  }
}

SamplingMatrix generate_sampling_matrix(int block_size, std::uint64_t seed) {
  return SamplingMatrix(block_size, seed);
}

long long MeasurementSet::total_samples() const {
  long long total = 0;
  for (int m : counts) total += m;
  return total;
}

Eigen::VectorXd sample_block(const Eigen::VectorXd& block, int count, const SamplingMatrix& phi) {
  if (block.size() != phi.dimension())
    throw Error(ErrorKind::Dimension, "block length does not match the sampling matrix");
  if (count < 1 || count > phi.dimension())
    throw Error(ErrorKind::Rate, "sample count " + std::to_string(count) + " outside [1, " +
                                     std::to_string(phi.dimension()) + "]");
  return phi.prefix(count) * block;
}

Eigen::VectorXd pseudo_inverse_init(const Eigen::VectorXd& samples, const SamplingMatrix& phi) {
  if (samples.size() > phi.dimension())
    throw Error(ErrorKind::Dimension, "more samples than sampling-matrix rows");
  return phi.prefix(static_cast<int>(samples.size())).transpose() * samples;
}

MeasurementSet measure_frame(const Frame& frame, const std::vector<int>& counts,
                             const SamplingMatrix& phi, int frame_index, FrameKind kind) {
  const BlockGrid grid = tile_blocks(frame, phi.block_size());
  if (static_cast<int>(counts.size()) != grid.block_count())
    throw Error(ErrorKind::Dimension, "one sample count per block required");
  MeasurementSet set;
  set.frame_index = frame_index;
  set.kind = kind;
  set.width = frame.width;
  set.height = frame.height;
  set.block_size = phi.block_size();
  set.counts = counts;
  set.samples.reserve(counts.size());
  for (int j = 0; j < grid.block_count(); ++j)
    set.samples.push_back(sample_block(grid.blocks.col(j), counts[j], phi));
  return set;
}

FrameObservations observe_all(const MeasurementSet& set) {
  FrameObservations obs;
  obs.width = set.width;
  obs.height = set.height;
  obs.block_size = set.block_size;
  obs.blocks.resize(set.counts.size());
  for (std::size_t j = 0; j < set.counts.size(); ++j) {
    auto& b = obs.blocks[j];
    b.rows.resize(set.counts[j]);
    for (int r = 0; r < set.counts[j]; ++r) b.rows[r] = r;
    b.values = set.samples[j];
  }
  return obs;
}

BlockProjector::BlockProjector(const FrameObservations& obs, const SamplingMatrix& phi) {
  if (obs.block_size != phi.block_size())
    throw Error(ErrorKind::Dimension, "observations and sampling matrix disagree on block size");
  operators_.reserve(obs.blocks.size());
  values_.reserve(obs.blocks.size());
  for (const auto& b : obs.blocks) {
    if (static_cast<Eigen::Index>(b.rows.size()) != b.values.size())
      throw Error(ErrorKind::CorruptStream, "row index and value counts differ");
    Eigen::MatrixXd op(b.rows.size(), phi.dimension());
    for (std::size_t r = 0; r < b.rows.size(); ++r) {
      if (b.rows[r] < 0 || b.rows[r] >= phi.dimension())
        throw Error(ErrorKind::CorruptStream, "row index outside the sampling matrix");
      op.row(static_cast<Eigen::Index>(r)) = phi.matrix().row(b.rows[r]);
    }
    operators_.push_back(std::move(op));
    values_.push_back(b.values);
  }
}

void BlockProjector::project_block(Eigen::Ref<Eigen::VectorXd> block, int j) const {
  const auto& op = operators_[j];
  if (op.rows() == 0) return;
  const Eigen::VectorXd mismatch = values_[j] - op * block;
  block.noalias() += op.transpose() * mismatch;
}

void BlockProjector::project(Eigen::MatrixXd& blocks) const {
  for (int j = 0; j < block_count(); ++j) project_block(blocks.col(j), j);
}

Eigen::MatrixXd BlockProjector::back_projection() const {
  const Eigen::Index n = operators_.empty() ? 0 : operators_.front().cols();
  Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(n, block_count());
  for (int j = 0; j < block_count(); ++j)
    if (operators_[j].rows() > 0) blocks.col(j) = operators_[j].transpose() * values_[j];
  return blocks;
}

double BlockProjector::max_residual(const Eigen::MatrixXd& blocks) const {
  double worst = 0.0;
  for (int j = 0; j < block_count(); ++j) {
    if (operators_[j].rows() == 0) continue;
    worst = std::max(worst, (operators_[j] * blocks.col(j) - values_[j]).cwiseAbs().maxCoeff());
  }
  return worst;
}

Eigen::VectorXd BlockProjector::apply(const Eigen::VectorXd& block, int j) const {
  return operators_[j] * block;
}

}  // namespace adacast
