#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "adacast/importance.hpp"
#include "adacast/ofdm_channel.hpp"
#include "adacast/reconstruction.hpp"
#include "adacast/video_io.hpp"

namespace adacast {

/// Everything a simulate run depends on. JSON keys are the CLI flag names
/// without the leading dashes.
struct ExperimentConfig {
  std::string name = "clip";          // sequence label in reports
  std::string input;                  // raw .y/.yuv path; empty selects `pattern`
  std::string pattern = "textured-noise-pan";
  std::uint64_t content_seed = 1;
  SynthParams synth;
  int width = 128;
  int height = 128;
  int frames = 32;
  int block_size = 8;
  int gop = 5;
  int min_per_block = 10;

  std::vector<long long> rates = {120000, 160000, 200000, 240000};  // T_tot per sequence
  std::vector<double> csnr_db = {15.0, 25.0, 35.0};
  double total_power = 1.0;
  int subchannels = 64;
  double loss_rate = 0.0;
  bool noiseless = false;
  ScalingMode scaling = ScalingMode::Power;

  std::uint64_t matrix_seed = 1;
  std::uint64_t channel_seed = 1;
  std::uint64_t noise_seed = 1;
  std::uint64_t loss_seed = 1;

  FusionWeights fusion;
  bool complexity_on_residual = true;  // C_i of P frames from R_i (else F_i)
  bool importance_on_original = true;  // O_i of P frames from F_i (else R_i)

  ReconstructionParams recon;
  std::vector<std::string> methods = {"proposed", "bcs-spl"};
  InitMode init = InitMode::BcsSpl;
  bool residual_domain = false;

  std::filesystem::path out = "out";
  int jobs = 1;
  bool trace = false;
  bool dump_alloc = false;
  bool dump_plan = false;

  /// Throws a config error naming the first bad field.
  void validate() const;
};

/// Overlays the keys present in `doc` onto `base`. Unknown keys are errors.
ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
nlohmann::json to_json(const ExperimentConfig& cfg);

VideoSequence load_input(const ExperimentConfig& cfg);

std::string_view to_string(InitMode mode);
InitMode parse_init_mode(std::string_view name);
std::string_view to_string(ScalingMode mode);
ScalingMode parse_scaling_mode(std::string_view name);

}  // namespace adacast
