#pragma once

#include <stdexcept>
#include <string>

namespace mgt {

// Base of every error raised by the library. `data_error()` separates bad
// input data (exit code 2 at the CLI) from bad configuration (exit code 1).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual bool data_error() const { return true; }
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// A record lacks a stream or aux series that the chosen detector needs.
class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& missing)
      : Error("missing " + missing), missing_(missing) {}
  const std::string& missing() const { return missing_; }

 private:
  std::string missing_;
};

// A score formula would divide by zero.
class DegenerateScoreError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  bool data_error() const override { return false; }
};

}  // namespace mgt
