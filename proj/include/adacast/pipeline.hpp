#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "adacast/bcs_codec.hpp"
#include "adacast/config.hpp"
#include "adacast/ofdm_channel.hpp"
#include "adacast/packetization.hpp"
#include "adacast/rate_control.hpp"
#include "adacast/reconstruction.hpp"

namespace adacast {

struct EncoderSettings {
  int block_size = 8;
  int min_per_block = 10;
  long long rate = 0;  // T_tot
  std::uint64_t matrix_seed = 1;
  FusionWeights fusion;
  bool complexity_on_residual = true;
  bool importance_on_original = true;
};

struct EncodedFrame {
  MeasurementSet measurements;
  double scale = 1.0;  // samples travel divided by this (RMS of the frame's samples)
  double complexity = 0.0;
  std::vector<double> importance;
};

struct EncodedSequence {
  int width = 0;
  int height = 0;
  int block_size = 0;
  int gop_length = 0;
  std::uint64_t matrix_seed = 0;
  RateBudget budget;
  std::vector<EncodedFrame> frames;
};

/// I frame every `gop_length` frames; P frames carry F_i - F_{i-1}.
EncodedSequence encode_sequence(const VideoSequence& video, const EncoderSettings& settings);

/// What the receiver learns over the lossless side channel.
struct FrameHeader {
  int index = 0;
  FrameKind kind = FrameKind::Intra;
  std::vector<int> counts;
  double scale = 1.0;
};

struct StreamHeader {
  int width = 0;
  int height = 0;
  int block_size = 0;
  int gop_length = 0;
  std::uint64_t matrix_seed = 0;
  int min_per_block = 0;
  long long rate = 0;
  long long overhead = 0;
  std::vector<FrameHeader> frames;

  int packet_count() const { return block_size * block_size; }
};

StreamHeader stream_header(const EncodedSequence& encoded);
nlohmann::json to_json(const StreamHeader& header);
StreamHeader stream_header_from_json(const nlohmann::json& doc);

/// Packets of every frame, samples divided by the frame scale.
std::vector<PacketBatch> packetize_sequence(const EncodedSequence& encoded);

struct ChannelSettings {
  int subchannels = 64;
  double csnr_db = 25.0;
  double total_power = 1.0;
  double loss_rate = 0.0;
  bool noiseless = false;
  ScalingMode scaling = ScalingMode::Power;
  std::uint64_t channel_seed = 1;  // frame i uses seed + i
  std::uint64_t noise_seed = 1;
  std::uint64_t loss_seed = 1;
  PowerSolverOptions solver;
};

struct TransmittedFrame {
  PacketBatch received;
  ChannelRealization channel;
  TransmissionPlan plan;
};

std::vector<TransmittedFrame> transmit_sequence(const std::vector<PacketBatch>& packets,
                                                const ChannelSettings& settings);

enum class DecodeMethod { Proposed, BcsSpl };
DecodeMethod parse_decode_method(std::string_view name);
std::string_view to_string(DecodeMethod method);

struct DecoderSettings {
  DecodeMethod method = DecodeMethod::Proposed;
  ReconstructionParams recon;
  InitMode init = InitMode::BcsSpl;
  bool residual_domain = false;
};

struct DecodeResult {
  VideoSequence video;  // clamped to [0, 255]
  std::vector<bool> concealed;
  std::vector<ReconstructionTrace> traces;
  std::vector<int> max_block_loss;  // most samples erased from any one block, per frame
};

/// Unrecoverable frames repeat the previous reconstruction (mid-gray for
/// the first frame) and are flagged in `concealed`.
DecodeResult decode_sequence(const StreamHeader& header, const std::vector<PacketBatch>& received,
                             const DecoderSettings& settings);

struct ReportRow {
  std::string sequence;
  std::string method;
  long long rate = 0;
  double csnr_db = 0.0;
  double psnr_db = 0.0;
  double ms_ssim = 0.0;
  int concealed_frames = 0;
};

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(std::istream& in);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

using ProgressSink = std::function<void(const std::string&)>;

/// Every (rate, csnr) cell: encode, packetize, transmit, decode with each
/// method, score. Writes report.csv under cfg.out plus one directory per
/// cell. Stage failures are rethrown with the stage named, after the rows
/// of the cells that finished have been written.
std::vector<ReportRow> run_simulate(const ExperimentConfig& cfg, const ProgressSink& progress = {});

struct BdRow {
  std::string sequence;
  double csnr_db = 0.0;
  std::string baseline;
  std::string method;
  double bd_psnr = 0.0;
  double bd_ms_ssim = 0.0;
};

/// Curves are grouped by (sequence, csnr); within a group every method is
/// compared against `baseline` (or the first method by name if absent).
std::vector<BdRow> bd_table(const std::vector<ReportRow>& rows, const std::string& baseline = "proposed");
void write_bd_csv(std::ostream& out, const std::vector<BdRow>& rows);

EncoderSettings encoder_settings(const ExperimentConfig& cfg, long long rate);
ChannelSettings channel_settings(const ExperimentConfig& cfg, double csnr_db);
DecoderSettings decoder_settings(const ExperimentConfig& cfg, DecodeMethod method);

}  // namespace adacast
