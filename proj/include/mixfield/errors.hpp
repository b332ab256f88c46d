#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixfield {

/// Argument outside the admissible interval of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Input data that cannot be processed (non-finite samples, bad sizes).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Mesh connectivity that an operation cannot handle.
class TopologyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A ray profile whose weights vanish everywhere.
class DegenerateProfileError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Empty point set or mesh where a non-empty one is required.
class EmptyInputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite loss during projection.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(int epoch, std::size_t vertex)
      : std::runtime_error("projection diverged at epoch " + std::to_string(epoch) +
                           " (vertex " + std::to_string(vertex) + ")"),
        epoch_(epoch), vertex_(vertex) {}
  int epoch() const noexcept { return epoch_; }
  std::size_t vertex() const noexcept { return vertex_; }

private:
  int epoch_;
  std::size_t vertex_;
};

/// Malformed serialized input. `position` is a byte offset for binary
/// formats and a 1-based line number for text formats.
class FormatError : public std::runtime_error {
public:
  FormatError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

/// Filesystem failure (missing file, unwritable path).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace mixfield
