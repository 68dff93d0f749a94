#pragma once

#include <stdexcept>
#include <string>

namespace nahmkn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankMismatch : public Error {
 public:
  using Error::Error;
};

/// A matrix failed the structural checks of the type it was meant to become
/// (skew-Hermitian, traceless, unitary, unit determinant, ...).
class InvalidElement : public Error {
 public:
  using Error::Error;
};

/// The principal logarithm is not well defined: an eigenvalue sits on the
/// branch cut.
class BranchAmbiguity : public Error {
 public:
  using Error::Error;
};

class StepOutOfRange : public Error {
 public:
  using Error::Error;
};

/// The reduced Nahm flow of the initial data does not reach t = 1.
class OutsideDomain : public Error {
 public:
  OutsideDomain(const std::string& what, double blowup_time)
      : Error(what), blowup_time_(blowup_time) {}
  double blowup_time() const { return blowup_time_; }

 private:
  double blowup_time_;
};

class ResidualViolation : public Error {
 public:
  ResidualViolation(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class NoPreimage : public Error {
 public:
  NoPreimage(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class InvalidProblem : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace nahmkn
