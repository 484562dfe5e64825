#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pbfgnn {

// Bad input to an operation (shape mismatch, precondition violated, unknown key).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation called on an object in the wrong state (e.g. backward on an inference cache).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite values or a factorization that failed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericBlowup : public NumericError {
 public:
  NumericBlowup(std::size_t node, double time)
      : NumericError("non-finite temperature at node " + std::to_string(node) +
                     " (t = " + std::to_string(time) + " s)"),
        node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class RolloutDivergence : public NumericError {
 public:
  explicit RolloutDivergence(std::size_t timestep)
      : NumericError("non-finite prediction at rollout timestep " + std::to_string(timestep)),
        timestep_(timestep) {}
  std::size_t timestep() const { return timestep_; }

 private:
  std::size_t timestep_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed persisted data. offset is the byte position where parsing failed.
class FormatError : public IoError {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : IoError(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class TruncationError : public IoError {
 public:
  explicit TruncationError(std::size_t frame)
      : IoError("file truncated inside frame " + std::to_string(frame)), frame_(frame) {}
  std::size_t frame() const { return frame_; }

 private:
  std::size_t frame_;
};

}  // namespace pbfgnn
