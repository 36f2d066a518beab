#pragma once

#include <stdexcept>
#include <string>

namespace cislunar {

// Root of every error the library throws. Callers that only care about
// "something went wrong in the toolkit" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Geometry without a well-defined frame (rectilinear motion, zero radius).
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// Element-set singularities: i = pi for MEE, hyperbolic branch, coincident bodies.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  RangeError(const std::string& what, double lo, double hi)
      : Error(what), lo_(lo), hi_(hi) {}
  double span_begin() const { return lo_; }
  double span_end() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public NumericalError {
 public:
  ConditioningError(const std::string& what, double cond)
      : NumericalError(what), cond_(cond) {}
  double condition_number() const { return cond_; }

 private:
  double cond_;
};

class PropellantExhausted : public Error {
 public:
  using Error::Error;
};

class SingularControl : public Error {
 public:
  using Error::Error;
};

class PropagationError : public Error {
 public:
  PropagationError(const std::string& what, double last_good_tau_s)
      : Error(what), last_tau_(last_good_tau_s) {}
  double last_good_tau_s() const { return last_tau_; }

 private:
  double last_tau_;
};

// The arc-interface event never fired before the propagation horizon.
class NoTransition : public PropagationError {
 public:
  using PropagationError::PropagationError;
};

}  // namespace cislunar
