#include "adacast/error.hpp"
#include "adacast/random.hpp"

#include <cmath>
#include <numbers>

namespace adacast {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::TruncatedInput: return "truncated-input";
    case ErrorKind::Config: return "config";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Rate: return "rate";
    case ErrorKind::CorruptStream: return "corrupt-stream";
    case ErrorKind::Allocation: return "allocation";
    case ErrorKind::Transmission: return "transmission";
    case ErrorKind::Range: return "range";
    case ErrorKind::Io: return "io";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

double RandomSource::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

}  // namespace adacast
