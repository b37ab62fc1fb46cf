#include "adacast/packetization.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "adacast/error.hpp"

namespace adacast {

std::vector<int> PacketBatch::lengths() const {
  std::vector<int> out;
  out.reserve(packets.size());
  for (const auto& p : packets) out.push_back(p.length());
  return out;
}

std::vector<double> PacketBatch::importance() const {
  const auto len = lengths();
  long long total = 0;
  for (int l : len) total += l;
  std::vector<double> pi(len.size(), 0.0);
  if (total == 0) return pi;
  for (std::size_t p = 0; p < len.size(); ++p) pi[p] = static_cast<double>(len[p]) / static_cast<double>(total);
  return pi;
}

PacketBatch packetize(const MeasurementSet& set) {
  const int packet_count = set.block_size * set.block_size;
  PacketBatch batch;
  batch.frame_index = set.frame_index;
  batch.packets.resize(packet_count);
  for (int p = 0; p < packet_count; ++p) {
    auto& packet = batch.packets[p];
    for (int j = 0; j < set.block_count(); ++j) {
      if (set.counts[j] > p) {
        packet.blocks.push_back(j);
        packet.samples.push_back(set.samples[j](p));
      }
    }
  }
  return batch;
}

DepacketizedFrame depacketize(const PacketBatch& batch, const std::vector<int>& counts) {
  DepacketizedFrame out;
  out.samples.resize(counts.size());
  out.missing.resize(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0 || counts[j] > batch.packet_count())
      throw Error(ErrorKind::CorruptStream, "block " + std::to_string(j) + " claims more samples than packets");
    out.samples[j] = Eigen::VectorXd::Zero(counts[j]);
    out.missing[j].assign(counts[j], false);
  }

  bool any_received = false;
  for (int p = 0; p < batch.packet_count(); ++p) {
    const auto& packet = batch.packets[p];
    if (packet.blocks.size() != packet.samples.size())
      throw Error(ErrorKind::CorruptStream, "packet " + std::to_string(p) + " has mismatched index/sample lists");
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (counts[j] <= p) continue;
      if (cursor >= packet.blocks.size() || packet.blocks[cursor] != static_cast<int>(j))
        throw Error(ErrorKind::CorruptStream, "packet " + std::to_string(p) + " does not match metadata counts");
      if (packet.erased) out.missing[j][p] = true;
      else out.samples[j](p) = packet.samples[cursor];
      ++cursor;
    }
    if (cursor != packet.blocks.size())
      throw Error(ErrorKind::CorruptStream, "packet " + std::to_string(p) + " longer than metadata allows");
    if (!packet.erased && packet.length() > 0) any_received = true;
  }
  out.unrecoverable = !any_received;
  return out;
}

FrameObservations DepacketizedFrame::observations(int width, int height, int block_size) const {
  FrameObservations obs;
  obs.width = width;
  obs.height = height;
  obs.block_size = block_size;
  obs.blocks.resize(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    auto& b = obs.blocks[j];
    std::vector<double> kept;
    for (int r = 0; r < static_cast<int>(samples[j].size()); ++r) {
      if (missing[j][r]) continue;
      b.rows.push_back(r);
      kept.push_back(samples[j](r));
    }
    b.values = Eigen::Map<const Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
  }
  return obs;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw Error(ErrorKind::TruncatedInput, "packet dump ends mid-record");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_packet_dump(std::ostream& out, const PacketBatch& batch) {
  for (int p = 0; p < batch.packet_count(); ++p) {
    const auto& packet = batch.packets[p];
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(batch.frame_index));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(p));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(packet.length()));
    put_le<std::uint8_t>(out, packet.erased ? 1 : 0);
    for (double s : packet.samples) put_le<double>(out, s);
  }
  if (!out) throw Error(ErrorKind::Io, "packet dump write failed");
}

PacketBatch read_packet_dump(std::istream& in, const std::vector<int>& counts, int packet_count) {
  PacketBatch batch;
  batch.packets.resize(packet_count);
  for (int p = 0; p < packet_count; ++p) {
    const auto frame = get_le<std::uint32_t>(in);
    const auto index = get_le<std::uint16_t>(in);
    const auto length = get_le<std::uint32_t>(in);
    const auto erased = get_le<std::uint8_t>(in);
    if (p == 0) batch.frame_index = static_cast<int>(frame);
    if (static_cast<int>(frame) != batch.frame_index || index != p)
      throw Error(ErrorKind::CorruptStream, "packet dump out of order at packet " + std::to_string(p));
    auto& packet = batch.packets[p];
    packet.erased = erased != 0;
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (counts[j] > p) packet.blocks.push_back(static_cast<int>(j));
    if (packet.blocks.size() != length)
      throw Error(ErrorKind::CorruptStream, "packet " + std::to_string(p) + " length disagrees with metadata");
    packet.samples.resize(length);
    for (auto& s : packet.samples) s = get_le<double>(in);
  }
  return batch;
}

}  // namespace adacast
