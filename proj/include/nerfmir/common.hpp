#pragma once

#include <stdexcept>
#include <string>

namespace nerfmir {

/// Bad arguments or malformed data (dimension mismatches, invalid configs, ...).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem problems; the message names the offending path.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values showed up where they must not (training, field evaluation).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nerfmir
