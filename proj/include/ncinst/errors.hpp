#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ncinst {

// Base for everything the library throws on bad input or failed checks.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SpaceMismatch : public Error {
 public:
  SpaceMismatch() : Error("operators live on different Fock spaces") {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// A numerical identity failed by more than the allowed tolerance.
class ToleranceError : public Error {
 public:
  ToleranceError(const std::string& what, double value, double tol)
      : Error(what + ": " + std::to_string(value) + " exceeds " + std::to_string(tol)),
        value_(value), tol_(tol) {}
  double value() const { return value_; }
  double tol() const { return tol_; }

 private:
  double value_;
  double tol_;
};

// Gamma has an eigenvalue below the floor on the interior. Carries the
// low end of the spectrum so callers can dump it.
class SingularGamma : public Error {
 public:
  SingularGamma(const std::string& what, std::vector<double> spectrum)
      : Error(what), spectrum_(std::move(spectrum)) {}
  const std::vector<double>& spectrum() const { return spectrum_; }

 private:
  std::vector<double> spectrum_;
};

// Malformed files or configs.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace ncinst
