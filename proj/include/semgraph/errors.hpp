#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace semgraph {

/// Malformed or inconsistent caller input (bad file, unknown class, dangling edge).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A confusion-matrix pattern whose metric denominators vanish.
class DegeneratePatternError : public InputError {
 public:
  DegeneratePatternError(std::string pattern, const std::string& what)
      : InputError(what), pattern_(std::move(pattern)) {}
  const std::string& pattern() const noexcept { return pattern_; }

 private:
  std::string pattern_;
};

/// Every state path has zero probability from `step` onwards.
class DecodeFailure : public std::runtime_error {
 public:
  DecodeFailure(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class EstimationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the pipeline when a stage cannot process a frame.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, std::int64_t frame, const std::string& what)
      : std::runtime_error(stage + " failed at frame " + std::to_string(frame) + ": " + what),
        stage_(std::move(stage)),
        frame_(frame) {}
  const std::string& stage() const noexcept { return stage_; }
  std::int64_t frame() const noexcept { return frame_; }

 private:
  std::string stage_;
  std::int64_t frame_;
};

}  // namespace semgraph
