#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adacast/random.hpp"
#include "adacast/video_io.hpp"

namespace testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(ADACAST_TEST_DATA) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("adacast-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Rows of comma-separated numbers.
inline std::vector<std::vector<double>> read_csv_numbers(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline adacast::Frame frame_from_rows(const std::vector<std::vector<double>>& rows) {
  adacast::Frame f(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) f.at(x, y) = rows[y][x];
  return f;
}

inline adacast::Frame random_frame(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 255.0) {
  adacast::RandomSource rng(seed);
  adacast::Frame f(w, h);
  for (auto& v : f.plane) v = lo + (hi - lo) * rng.uniform();
  return f;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace testing
