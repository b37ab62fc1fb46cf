#include "adacast/video_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "adacast/error.hpp"
#include "adacast/random.hpp"

namespace adacast {

Frame::Frame(int w, int h, double fill)
    : width(w), height(h), plane(static_cast<std::size_t>(w) * h, fill) {
  if (w <= 0 || h <= 0) throw Error(ErrorKind::Dimension, "frame sides must be positive");
}

RawFormat parse_raw_format(std::string_view name) {
  if (name == "y" || name == "y8" || name == "gray") return RawFormat::Y8;
  if (name == "yuv" || name == "yuv420" || name == "i420") return RawFormat::Yuv420;
  throw Error(ErrorKind::Config, "unknown raw format '" + std::string(name) + "'");
}

RawFormat raw_format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".y") return RawFormat::Y8;
  if (ext == ".yuv") return RawFormat::Yuv420;
  throw Error(ErrorKind::Config, "cannot infer raw format from '" + path.string() + "'");
}

SynthPattern parse_synth_pattern(std::string_view name) {
  if (name == "constant") return SynthPattern::Constant;
  if (name == "ramp") return SynthPattern::Ramp;
  if (name == "moving-gaussian-blob") return SynthPattern::MovingGaussianBlob;
  if (name == "textured-noise-pan") return SynthPattern::TexturedNoisePan;
  throw Error(ErrorKind::Config, "unknown synthetic pattern '" + std::string(name) + "'");
}

std::string_view to_string(SynthPattern pattern) {
  switch (pattern) {
    case SynthPattern::Constant: return "constant";
    case SynthPattern::Ramp: return "ramp";
    case SynthPattern::MovingGaussianBlob: return "moving-gaussian-blob";
    case SynthPattern::TexturedNoisePan: return "textured-noise-pan";
  }
  return "unknown";
}

namespace {

std::size_t frame_bytes(int width, int height, RawFormat format) {
  const auto luma = static_cast<std::size_t>(width) * height;
  return format == RawFormat::Y8 ? luma : luma + 2 * ((width + 1) / 2) * ((height + 1) / 2);
}

// Sum of bilinearly interpolated lattice-noise octaves plus a few hard-edged
// rectangles, normalized to [16, 235]. Gives blocks both smooth and sharp
// structure so sparse recovery behaves like it does on natural content.
Frame textured_canvas(int width, int height, RandomSource& rng) {
  Frame canvas(width, height, 0.0);
  const int cells[] = {32, 16, 8, 4};
  const double weights[] = {1.0, 0.6, 0.35, 0.2};
  for (int octave = 0; octave < 4; ++octave) {
    const int cell = cells[octave];
    const int gx = width / cell + 2;
    const int gy = height / cell + 2;
    std::vector<double> lattice(static_cast<std::size_t>(gx) * gy);
    for (auto& v : lattice) v = rng.uniform();
    for (int y = 0; y < height; ++y) {
      const double fy = static_cast<double>(y) / cell;
      const int iy = static_cast<int>(fy);
      double ty = fy - iy;
      ty = ty * ty * (3.0 - 2.0 * ty);
      for (int x = 0; x < width; ++x) {
        const double fx = static_cast<double>(x) / cell;
        const int ix = static_cast<int>(fx);
        double tx = fx - ix;
        tx = tx * tx * (3.0 - 2.0 * tx);
        const auto idx = [&](int i, int j) { return static_cast<std::size_t>(j) * gx + i; };
        const double top = lattice[idx(ix, iy)] * (1 - tx) + lattice[idx(ix + 1, iy)] * tx;
        const double bottom =
            lattice[idx(ix, iy + 1)] * (1 - tx) + lattice[idx(ix + 1, iy + 1)] * tx;
        canvas.at(x, y) += weights[octave] * (top * (1 - ty) + bottom * ty);
      }
    }
  }
  const int rectangles = std::max(4, width * height / 4096);
  for (int r = 0; r < rectangles; ++r) {
    const int x0 = static_cast<int>(rng.uniform() * width);
    const int y0 = static_cast<int>(rng.uniform() * height);
    const int w = 4 + static_cast<int>(rng.uniform() * 28);
    const int h = 4 + static_cast<int>(rng.uniform() * 28);
    const double offset = (rng.uniform() - 0.5) * 1.2;
    for (int y = y0; y < std::min(height, y0 + h); ++y)
      for (int x = x0; x < std::min(width, x0 + w); ++x) canvas.at(x, y) += offset;
  }
  const auto [lo, hi] = std::minmax_element(canvas.plane.begin(), canvas.plane.end());
  const double low = *lo;
  const double span = std::max(*hi - low, 1e-12);
  for (auto& v : canvas.plane) v = 16.0 + 219.0 * (v - low) / span;
  return canvas;
}

}  // namespace

VideoSequence load_video(const std::filesystem::path& path, int width, int height,
                         int frame_count, RawFormat format, int gop_length) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::Dimension, "frame sides must be positive");
  if (frame_count < 1) throw Error(ErrorKind::Config, "frame count must be at least 1");
  if (gop_length < 1) throw Error(ErrorKind::Config, "GOP length must be at least 1");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");

  const std::size_t stride = frame_bytes(width, height, format);
  const std::size_t luma = static_cast<std::size_t>(width) * height;
  std::vector<unsigned char> buffer(stride);
  VideoSequence video;
  video.gop_length = gop_length;
  video.frames.reserve(frame_count);
  for (int i = 0; i < frame_count; ++i) {
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(stride));
    if (static_cast<std::size_t>(in.gcount()) != stride) {
      throw Error(ErrorKind::TruncatedInput, "'" + path.string() + "' holds only " +
                                                 std::to_string(i) + " complete frames, " +
                                                 std::to_string(frame_count) + " requested");
    }
    Frame frame(width, height);
    for (std::size_t k = 0; k < luma; ++k) frame.plane[k] = buffer[k];
    video.frames.push_back(std::move(frame));
  }
  return video;
}

void write_video(const std::filesystem::path& path, const VideoSequence& video, RawFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot create '" + path.string() + "'");
  for (const auto& frame : video.frames) {
    std::vector<unsigned char> bytes(frame_bytes(frame.width, frame.height, format), 128);
    for (std::size_t k = 0; k < frame.size(); ++k)
      bytes[k] = static_cast<unsigned char>(std::clamp(std::round(frame.plane[k]), 0.0, 255.0));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

VideoSequence synthesize_video(int width, int height, int frame_count, SynthPattern pattern,
                               std::uint64_t seed, const SynthParams& params, int gop_length) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::Dimension, "frame sides must be positive");
  if (frame_count < 1) throw Error(ErrorKind::Config, "frame count must be at least 1");
  if (gop_length < 1) throw Error(ErrorKind::Config, "GOP length must be at least 1");

  VideoSequence video;
  video.gop_length = gop_length;
  video.frames.reserve(frame_count);
  RandomSource rng(seed);

  switch (pattern) {
    case SynthPattern::Constant:
      for (int t = 0; t < frame_count; ++t)
        video.frames.emplace_back(width, height, params.constant_level);
      break;

    case SynthPattern::Ramp: {
      Frame ramp(width, height);
      const double denom = std::max(1, width + height - 2);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) ramp.at(x, y) = 255.0 * (x + y) / denom;
      video.frames.assign(frame_count, ramp);
      break;
    }

    case SynthPattern::MovingGaussianBlob: {
      const double cx = width * (0.25 + 0.25 * rng.uniform());
      const double cy = height * (0.25 + 0.25 * rng.uniform());
      const double sigma = std::min(width, height) / 8.0;
      for (int t = 0; t < frame_count; ++t) {
        Frame frame(width, height);
        const double px = cx + params.velocity_x * t;
        const double py = cy + params.velocity_y * t;
        for (int y = 0; y < height; ++y) {
          for (int x = 0; x < width; ++x) {
            const double dx = x - px;
            const double dy = y - py;
            frame.at(x, y) = params.blob_background +
                             params.blob_amplitude * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
          }
        }
        video.frames.push_back(std::move(frame));
      }
      break;
    }

    case SynthPattern::TexturedNoisePan: {
      const int vx = static_cast<int>(std::lround(params.velocity_x));
      const int vy = static_cast<int>(std::lround(params.velocity_y));
      const int span_x = std::abs(vx) * (frame_count - 1);
      const int span_y = std::abs(vy) * (frame_count - 1);
      const Frame canvas = textured_canvas(width + span_x, height + span_y, rng);
      for (int t = 0; t < frame_count; ++t) {
        const int ox = vx >= 0 ? vx * t : span_x + vx * t;
        const int oy = vy >= 0 ? vy * t : span_y + vy * t;
        Frame frame(width, height);
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x) frame.at(x, y) = canvas.at(x + ox, y + oy);
        video.frames.push_back(std::move(frame));
      }
      break;
    }
  }
  return video;
}

void validate_block_dimensions(int width, int height, int block_size) {
  if (block_size < 2) throw Error(ErrorKind::Config, "block size must be at least 2");
  if (width % block_size != 0 || height % block_size != 0) {
    throw Error(ErrorKind::Dimension, std::to_string(width) + "x" + std::to_string(height) +
                                          " is not divisible into " + std::to_string(block_size) +
                                          "x" + std::to_string(block_size) + " blocks");
  }
}

Frame compute_residual(const Frame& current, const Frame& previous) {
  if (current.width != previous.width || current.height != previous.height)
    throw Error(ErrorKind::Dimension, "residual of frames with different sizes");
  Frame residual(current.width, current.height);
  for (std::size_t k = 0; k < current.size(); ++k)
    residual.plane[k] = current.plane[k] - previous.plane[k];
  return residual;
}

Frame add_frames(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error(ErrorKind::Dimension, "sum of frames with different sizes");
  Frame sum(a.width, a.height);
  for (std::size_t k = 0; k < a.size(); ++k) sum.plane[k] = a.plane[k] + b.plane[k];
  return sum;
}

BlockGrid tile_blocks(const Frame& frame, int block_size) {
  validate_block_dimensions(frame.width, frame.height, block_size);
  BlockGrid grid;
  grid.block_size = block_size;
  grid.blocks_x = frame.width / block_size;
  grid.blocks_y = frame.height / block_size;
  const int n = block_size * block_size;
  grid.blocks.resize(n, grid.block_count());
  for (int by = 0; by < grid.blocks_y; ++by) {
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      const int j = by * grid.blocks_x + bx;
      for (int c = 0; c < block_size; ++c)
        for (int r = 0; r < block_size; ++r)
          grid.blocks(c * block_size + r, j) = frame.at(bx * block_size + c, by * block_size + r);
    }
  }
  return grid;
}

Frame untile_blocks(const BlockGrid& grid) {
  const int b = grid.block_size;
  if (grid.blocks.rows() != b * b || grid.blocks.cols() != grid.block_count())
    throw Error(ErrorKind::Dimension, "block matrix does not match grid geometry");
  Frame frame(grid.width(), grid.height());
  for (int by = 0; by < grid.blocks_y; ++by) {
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      const int j = by * grid.blocks_x + bx;
      for (int c = 0; c < b; ++c)
        for (int r = 0; r < b; ++r) frame.at(bx * b + c, by * b + r) = grid.blocks(c * b + r, j);
    }
  }
  return frame;
}

Frame clamp_to_8bit_range(Frame frame) {
  for (auto& v : frame.plane) v = std::clamp(v, 0.0, 255.0);
  return frame;
}

}  // namespace adacast
