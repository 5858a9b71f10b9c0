#pragma once

#include <stdexcept>
#include <string>

namespace photospin {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain of an operation (nonpositive rate, bad fraction, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Missing or contradictory configuration, e.g. a four-level generator
/// requested without deshelving parameters.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A^2 < 4B: the rate matrix has complex eigenvalues.
class OscillatoryRegimeError : public Error {
 public:
  using Error::Error;
};

/// tau1 == tau2: the bunching amplitude is undefined.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Asymptotic limits that map to nonphysical rates.
class InconsistentLimitsError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class RebinError : public Error {
 public:
  using Error::Error;
};

/// Normal equations are singular; `direction` names the parameter that
/// dominates the null direction.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::string direction)
      : Error(what), direction_(std::move(direction)) {}
  const std::string& direction() const noexcept { return direction_; }

 private:
  std::string direction_;
};

/// Density-matrix invariants were breached during time integration.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line and column when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : Error(what), line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace photospin
