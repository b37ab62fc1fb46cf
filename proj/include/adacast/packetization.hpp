#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "adacast/bcs_codec.hpp"

namespace adacast {

struct Packet {
  std::vector<int> blocks;      // block index of each sample, raster order
  std::vector<double> samples;  // sample p-1 of each listed block
  bool erased = false;

  int length() const { return static_cast<int>(samples.size()); }
};

/// P = B^2 packets; packet p carries the p-th sample of every block with
/// m_j >= p, so losing one packet costs each block at most one sample.
struct PacketBatch {
  int frame_index = 0;
  std::vector<Packet> packets;

  int packet_count() const { return static_cast<int>(packets.size()); }
  std::vector<int> lengths() const;
  /// pi_p = L(p) / sum_q L(q).
  std::vector<double> importance() const;
};

PacketBatch packetize(const MeasurementSet& set);

struct DepacketizedFrame {
  std::vector<Eigen::VectorXd> samples;    // length m_j; zero where missing
  std::vector<std::vector<bool>> missing;  // per block, per sample
  bool unrecoverable = false;              // every packet was lost

  /// Surviving rows only, ready for projection.
  FrameObservations observations(int width, int height, int block_size) const;
};

/// Inverse of packetize. Throws a corrupt-stream error when packet lengths
/// disagree with the per-block counts from metadata.
DepacketizedFrame depacketize(const PacketBatch& batch, const std::vector<int>& counts);

/// Debug dump: per packet a little-endian header {frame u32, packet u16,
/// length u32, erased u8} (11 bytes, packet index 0-based) followed by
/// `length` little-endian IEEE-754 doubles.
void write_packet_dump(std::ostream& out, const PacketBatch& batch);
/// Reads one frame's worth of packets. Block indices are rebuilt from counts.
PacketBatch read_packet_dump(std::istream& in, const std::vector<int>& counts, int packet_count);

}  // namespace adacast
