#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adacast {

enum class ErrorKind {
  Dimension,
  TruncatedInput,
  Config,
  Budget,
  Rate,
  CorruptStream,
  Allocation,
  Transmission,
  Range,
  Io,
  Usage,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind),
        detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace adacast
