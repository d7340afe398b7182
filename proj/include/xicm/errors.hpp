#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xicm {

/// Base class for every domain error raised by the library. The CLI maps
/// these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "IoError"; }
};

/// A dataset file violated the episode or manifest schema.
class SchemaError : public Error {
 public:
  SchemaError(std::string file, std::size_t line, std::string field, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": field '" + field + "': " + what),
        file_(std::move(file)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }
  const char* kind() const noexcept override { return "SchemaError"; }

 private:
  std::string file_;
  std::size_t line_;
  std::string field_;
};

class RangeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "RangeError"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "DimensionError"; }
};

/// Binary feature file could not be decoded.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error("at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }
  const char* kind() const noexcept override { return "FormatError"; }

 private:
  std::size_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ConfigError"; }
};

class NoActionsFound : public Error {
 public:
  NoActionsFound() : Error("no parsable action found in model output") {}
  const char* kind() const noexcept override { return "NoActionsFound"; }
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(int epoch)
      : Error("training loss became non-finite at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }
  const char* kind() const noexcept override { return "TrainingDiverged"; }

 private:
  int epoch_;
};

class GatewayError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "GatewayError"; }
};

class ExhaustedRetries : public GatewayError {
 public:
  ExhaustedRetries(int last_status, int attempts)
      : GatewayError("gave up after " + std::to_string(attempts) +
                     " attempts, last status " + std::to_string(last_status)),
        last_status_(last_status) {}
  int last_status() const noexcept { return last_status_; }
  const char* kind() const noexcept override { return "ExhaustedRetries"; }

 private:
  int last_status_;
};

class GatewayTimeout : public GatewayError {
 public:
  using GatewayError::GatewayError;
  const char* kind() const noexcept override { return "Timeout"; }
};

class AuthFailure : public GatewayError {
 public:
  explicit AuthFailure(int status)
      : GatewayError("endpoint rejected credentials with status " + std::to_string(status)),
        status_(status) {}
  int status() const noexcept { return status_; }
  const char* kind() const noexcept override { return "AuthFailure"; }

 private:
  int status_;
};

}  // namespace xicm
