#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "adacast/video_io.hpp"

namespace adacast {

/// Square B^2 x B^2 matrix with orthonormal rows, regenerated from its seed
/// on both ends of the link. Block j uses the first m_j rows.
class SamplingMatrix {
 public:
  SamplingMatrix(int block_size, std::uint64_t seed);

  int block_size() const { return block_size_; }
  int dimension() const { return static_cast<int>(matrix_.rows()); }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  auto prefix(int rows) const { return matrix_.topRows(rows); }

 private:
  int block_size_;
  std::uint64_t seed_;
  Eigen::MatrixXd matrix_;
};

SamplingMatrix generate_sampling_matrix(int block_size, std::uint64_t seed);

enum class FrameKind { Intra, Residual };

struct MeasurementSet {
  int frame_index = 0;
  FrameKind kind = FrameKind::Intra;
  int width = 0;
  int height = 0;
  int block_size = 0;
  std::vector<int> counts;               // m_j
  std::vector<Eigen::VectorXd> samples;  // y_j, length m_j

  int block_count() const { return static_cast<int>(counts.size()); }
  long long total_samples() const;
};

/// y = (first m rows of Phi) x. Throws a rate error unless 1 <= m <= B^2.
Eigen::VectorXd sample_block(const Eigen::VectorXd& block, int count, const SamplingMatrix& phi);

/// x = Phi_j^T y; rows are orthonormal so this is the pseudo-inverse.
Eigen::VectorXd pseudo_inverse_init(const Eigen::VectorXd& samples, const SamplingMatrix& phi);

/// Samples every block of `frame` with its own count.
MeasurementSet measure_frame(const Frame& frame, const std::vector<int>& counts,
                             const SamplingMatrix& phi, int frame_index, FrameKind kind);

/// Measurements of one block as seen by the receiver: the surviving row
/// indices of Phi and the matching sample values.
struct BlockObservation {
  std::vector<int> rows;
  Eigen::VectorXd values;
};

struct FrameObservations {
  int width = 0;
  int height = 0;
  int block_size = 0;
  std::vector<BlockObservation> blocks;
};

FrameObservations observe_all(const MeasurementSet& set);

/// Per-block affine projection onto {x : Phi_j x = y_j}.
class BlockProjector {
 public:
  BlockProjector(const FrameObservations& obs, const SamplingMatrix& phi);

  int block_count() const { return static_cast<int>(operators_.size()); }
  int observed_rows(int j) const { return static_cast<int>(operators_[j].rows()); }

  /// x + Phi_j^T (y_j - Phi_j x), in place on column j of `blocks`.
  void project(Eigen::MatrixXd& blocks) const;
  void project_block(Eigen::Ref<Eigen::VectorXd> block, int j) const;

  /// Phi_j^T y_j for every block.
  Eigen::MatrixXd back_projection() const;

  /// Largest |Phi_j x_j - y_j| over all blocks.
  double max_residual(const Eigen::MatrixXd& blocks) const;

  /// Phi_j applied to a block, for lifting residual measurements.
  Eigen::VectorXd apply(const Eigen::VectorXd& block, int j) const;

 private:
  std::vector<Eigen::MatrixXd> operators_;  // rows of Phi observed for block j
  std::vector<Eigen::VectorXd> values_;
};

}  // namespace adacast
