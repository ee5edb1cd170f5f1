#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srlfd {

// Base of every error raised by the library. The CLI maps the subclasses
// onto process exit codes (config 2, numeric 3, I/O 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericFault : public Error {
 public:
  explicit NumericFault(const std::string& what, std::size_t node = npos)
      : Error(what), node_(node) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Wrong magic bytes or unsupported version in a binary container.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

// Container ended before its declared payload.
class TruncatedError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace srlfd
