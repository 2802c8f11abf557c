#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace semcom {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument shapes, non-finite inputs and similar contract violations.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A configuration failed validation. Carries every violated field.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Transmitter and receiver disagree on cache contents (dangling or
// inconsistent index references). Fatal for a run.
class ProtocolDesyncError : public Error {
 public:
  using Error::Error;
};

// Inversion produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}

  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

// Malformed, truncated or inconsistent manifest/binary files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace semcom
