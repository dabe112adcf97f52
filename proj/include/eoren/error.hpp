#pragma once

#include <stdexcept>
#include <string>

namespace eoren {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value, precondition violation, or bad argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Array or image dimensions that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Zero-magnitude or otherwise unusable directional filter.
class InvalidFilter : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// File exists but its contents could not be decoded.
class DecodeError : public IoError {
 public:
  using IoError::IoError;
};

/// Non-finite loss, residual, or parameter encountered.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Least-squares channel fit with zero variance in the network output.
class DegenerateChannel : public Error {
 public:
  DegenerateChannel(const std::string& what, int channel)
      : Error(what), channel_(channel) {}
  int channel() const noexcept { return channel_; }

 private:
  int channel_;
};

}  // namespace eoren
