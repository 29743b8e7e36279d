#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vemlump {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or degenerate mesh input (orientation, topology, bad indices).
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Mesh file parse failure; carries the 1-based offending line.
class ParseError : public MeshError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : MeshError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A dense local solve or factorization failed its residual check.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Time stepping produced non-finite values or detected unbounded growth.
class InstabilityError : public NumericalError {
 public:
  InstabilityError(std::size_t step, const std::string& what)
      : NumericalError("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace vemlump
