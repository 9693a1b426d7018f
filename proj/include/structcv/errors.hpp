#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace structcv {

// Bad caller input: out-of-range indices, mismatched lengths, malformed plans.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A non-finite value appeared. `coordinate` names the parameter direction or
// table entry being evaluated when it happened, or -1 when not applicable.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, long coordinate = -1)
      : std::runtime_error(what), coordinate_(coordinate) {}
  long coordinate() const noexcept { return coordinate_; }

 private:
  long coordinate_;
};

// State space or intermediate factor too large for exact computation.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, std::vector<double> last_iterate)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

class SingularHessianError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace structcv
