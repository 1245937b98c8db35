#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vri {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ConvergenceError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class NumericalError : public Error { using Error::Error; };
class FitError : public Error { using Error::Error; };
class ResolutionError : public Error { using Error::Error; };
class ConsistencyError : public Error { using Error::Error; };
class RegimeError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

class NoGlobalSolutionError : public Error {
 public:
  NoGlobalSolutionError(const std::string& what, double blowup_time)
      : Error(what), blowup_time_(blowup_time) {}
  double blowup_time() const { return blowup_time_; }

 private:
  double blowup_time_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0, std::string field = {})
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace vri
