#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdisp {

/// Argument outside the physical/mathematical domain of an operation.
struct InputDomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Tensor/vector arity or layout mismatch.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dispatch problem has no feasible allocation. `imbalance_kw` is the
/// signed gap: positive means demand exceeds available capacity, negative
/// means demand sits below the committed minimum generation.
struct InfeasibleError : std::runtime_error {
  double imbalance_kw;
  InfeasibleError(const std::string& msg, double imbalance)
      : std::runtime_error(msg), imbalance_kw(imbalance) {}
};

/// Bisection failed to meet the balance tolerance within its iteration cap.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A multi-timestep solve failed; `timestep` identifies the offending step.
struct HorizonError : std::runtime_error {
  std::size_t timestep;
  HorizonError(const std::string& msg, std::size_t t)
      : std::runtime_error(msg), timestep(t) {}
};

/// Malformed input file; `line` is 1-based (0 when not line-addressable).
struct ParseError : std::runtime_error {
  std::size_t line;
  explicit ParseError(const std::string& msg, std::size_t l = 0)
      : std::runtime_error(msg), line(l) {}
};

/// Operation requires state that was never populated (e.g. backward before
/// forward).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Training loop hit a non-finite loss.
struct TrainingError : std::runtime_error {
  int epoch;
  TrainingError(const std::string& msg, int e)
      : std::runtime_error(msg), epoch(e) {}
};

}  // namespace mdisp
