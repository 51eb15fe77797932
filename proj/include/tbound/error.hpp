#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tbound {

/// Base class of every error raised by the library. `stage()` names the
/// pipeline stage (solve, measure, bound, config) when one is known.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::string stage = {})
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }
  void set_stage(std::string s) { stage_ = std::move(s); }

 private:
  std::string stage_;
};

/// Invalid configuration or usage (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller handed in something that violates a precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Linear solver did not reach its tolerance (CLI exit code 3).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : Error(what, "solve"), residual_history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

/// Measured data contradict an inequality every admissible body satisfies.
class DataInconsistency : public Error {
 public:
  using Error::Error;
};

/// The three measurements do not span an invertible mean field.
class MeasurementDegeneracy : public Error {
 public:
  using Error::Error;
};

/// <L_c^{-1}>^{-1} requested at or beyond the singular translation c = sigma2.
class SingularAverage : public Error {
 public:
  using Error::Error;
};

}  // namespace tbound
