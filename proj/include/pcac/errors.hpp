#pragma once

#include <stdexcept>
#include <string>

namespace pcac {

// Error hierarchy mirrored by CLI exit codes:
//   UsageError -> 1, DataError -> 2, NumericError -> 3, FormatError -> 4.

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad flags, invalid argument combinations.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

/// Missing/unreadable inputs, malformed point cloud data, I/O failures.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

/// NaN losses, degenerate densities, numerical breakdown.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// Corrupt files, version or digest mismatches, truncated payloads.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

}  // namespace pcac
