#pragma once

#include <stdexcept>
#include <string>

namespace wmr {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclass onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (invalid ranges, impossible shapes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Problem with input data: missing files, empty splits, bad manifests.
class DataError : public Error {
 public:
  using Error::Error;
};

class FileNotFoundError : public DataError {
 public:
  using DataError::DataError;
};

/// Bytes exist but cannot be decoded as a supported image.
class DecodeError : public DataError {
 public:
  using DataError::DataError;
};

/// Decodable but outside what we accept (e.g. 16-bit PNG).
class UnsupportedFormatError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

/// Tensor or image dimensions that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A watermark cannot be placed inside the base image.
class PlacementError : public Error {
 public:
  using Error::Error;
};

/// NaN / Inf reached a loss or an update.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace wmr
