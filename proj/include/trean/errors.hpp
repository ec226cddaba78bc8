#pragma once

#include <stdexcept>
#include <string>

namespace trean {

/// Invalid argument or configuration value passed to a library call.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No packet boundary could be found in a sample stream.
class DetectionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// More pilot spikes than two superposed packets can explain.
class AmbiguousDetection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The stacked pilot convolution matrix is numerically rank deficient.
class RankDeficient : public std::runtime_error {
 public:
  RankDeficient(const std::string& what, double cond)
      : std::runtime_error(what), condition_number(cond) {}
  double condition_number;
};

/// Argument outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NoSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, std::string trace_)
      : std::runtime_error(what), trace(std::move(trace_)) {}
  std::string trace;
};

/// Malformed experiment or simulator configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trean
