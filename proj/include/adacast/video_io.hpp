#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace adacast {

/// A W x H plane of doubles, row-major (x fastest). Used for luma frames,
/// residuals and any per-pixel map (gradients, saliency).
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<double> plane;

  Frame() = default;
  Frame(int w, int h, double fill = 0.0);

  double& at(int x, int y) { return plane[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return plane[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return plane.size(); }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct VideoSequence {
  std::vector<Frame> frames;
  int gop_length = 5;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int frame_count() const { return static_cast<int>(frames.size()); }
};

/// B x B tiles of a frame stored as the columns of a B^2 x M matrix.
/// Blocks are in raster order; each block is vectorized column by column.
struct BlockGrid {
  int block_size = 0;
  int blocks_x = 0;
  int blocks_y = 0;
  Eigen::MatrixXd blocks;

  int block_count() const { return blocks_x * blocks_y; }
  int width() const { return blocks_x * block_size; }
  int height() const { return blocks_y * block_size; }
};

enum class RawFormat { Y8, Yuv420 };

RawFormat parse_raw_format(std::string_view name);
/// Infers the format from a `.y` / `.yuv` extension.
RawFormat raw_format_for_path(const std::filesystem::path& path);

enum class SynthPattern { Constant, Ramp, MovingGaussianBlob, TexturedNoisePan };

SynthPattern parse_synth_pattern(std::string_view name);
std::string_view to_string(SynthPattern pattern);

struct SynthParams {
  // Per-frame displacement in pixels (blob centre, or pan of the texture).
  double velocity_x = 2.0;
  double velocity_y = 1.0;
  double constant_level = 128.0;
  double blob_background = 40.0;
  double blob_amplitude = 180.0;
};

VideoSequence load_video(const std::filesystem::path& path, int width, int height,
                         int frame_count, RawFormat format, int gop_length = 5);

/// Writes frames rounded and clamped to 8 bits. Chroma planes of a 4:2:0
/// output are filled with 128.
void write_video(const std::filesystem::path& path, const VideoSequence& video,
                 RawFormat format);

VideoSequence synthesize_video(int width, int height, int frame_count, SynthPattern pattern,
                               std::uint64_t seed, const SynthParams& params = {},
                               int gop_length = 5);

/// Throws a dimension error unless block_size divides both sides.
void validate_block_dimensions(int width, int height, int block_size);

Frame compute_residual(const Frame& current, const Frame& previous);
Frame add_frames(const Frame& a, const Frame& b);

BlockGrid tile_blocks(const Frame& frame, int block_size);
Frame untile_blocks(const BlockGrid& grid);

Frame clamp_to_8bit_range(Frame frame);

}  // namespace adacast
