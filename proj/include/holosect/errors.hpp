#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace holosect {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class OutsideRadius : public Error {
 public:
  using Error::Error;
};

class OutsideOverlap : public Error {
 public:
  using Error::Error;
};

// Carries a human-readable description of a fiber point that no shrunken
// chart covers.
class CoverageFailure : public Error {
 public:
  CoverageFailure(const std::string& what, std::string witness)
      : Error(what + ": " + witness), witness_(std::move(witness)) {}
  const std::string& witness() const noexcept { return witness_; }

 private:
  std::string witness_;
};

class NoBumpCoverage : public Error {
 public:
  using Error::Error;
};

class ChartBreak : public Error {
 public:
  using Error::Error;
};

class DomainEscape : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class OutsideChart : public Error {
 public:
  OutsideChart(const std::string& what, std::size_t t)
      : Error(what + " at t=" + std::to_string(t)), t_(t) {}
  std::size_t t() const noexcept { return t_; }

 private:
  std::size_t t_;
};

class DegenerateFrame : public Error {
 public:
  DegenerateFrame(const std::string& what, std::size_t t)
      : Error(what + " at t=" + std::to_string(t)), t_(t) {}
  std::size_t t() const noexcept { return t_; }

 private:
  std::size_t t_;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

class BoundViolation : public Error {
 public:
  BoundViolation(const std::string& what, std::string witness)
      : Error(what + ": " + witness), witness_(std::move(witness)) {}
  const std::string& witness() const noexcept { return witness_; }

 private:
  std::string witness_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FixtureError : public Error {
 public:
  using Error::Error;
};

}  // namespace holosect
