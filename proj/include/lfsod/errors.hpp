#pragma once

#include <stdexcept>
#include <string>

namespace lft {

/// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is outside what the component supports.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed PPM/PGM bytes.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A scene directory is missing files or has inconsistent images.
class SceneError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value during evaluation or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint missing, truncated or inconsistent with the model.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad command-line or dataset usage.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace lft
