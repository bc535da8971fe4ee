#pragma once

#include <stdexcept>
#include <string>

namespace revolver {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// he-sim
class VectorTooLong : public Error {
 public:
  using Error::Error;
};

class ParamMismatch : public Error {
 public:
  using Error::Error;
};

/// A multiplicative operation was requested on a ciphertext with no level
/// left. In a real scheme this is the point where bootstrapping is needed.
class LevelExhausted : public Error {
 public:
  explicit LevelExhausted(const std::string& what, int iteration = -1, std::string stage = {})
      : Error(what), iteration_(iteration), stage_(std::move(stage)) {}

  /// 1-based training iteration, or -1 when raised outside a training loop.
  int iteration() const noexcept { return iteration_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  int iteration_;
  std::string stage_;
};

// encoding / matmul / nn
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class MatrixTooWide : public Error {
 public:
  using Error::Error;
};

// approx
class SingularFit : public Error {
 public:
  using Error::Error;
};

class DomainNotCovered : public Error {
 public:
  using Error::Error;
};

// data-io
class DataError : public Error {
 public:
  using Error::Error;
};

class BadMagic : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedFile : public DataError {
 public:
  using DataError::DataError;
};

class CountMismatch : public DataError {
 public:
  using DataError::DataError;
};

class BadHeader : public DataError {
 public:
  using DataError::DataError;
};

class RaggedRow : public DataError {
 public:
  using DataError::DataError;
};

class NonNumeric : public DataError {
 public:
  using DataError::DataError;
};

class LabelOutOfRange : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace revolver
