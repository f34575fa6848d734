#pragma once

#include <stdexcept>
#include <string>

namespace ponlut {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates an operation precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Interpolation support or window falls outside the signal.
class BoundaryError : public Error {
 public:
  using Error::Error;
};

/// Bit count does not divide into whole symbols.
class FramingError : public Error {
 public:
  using Error::Error;
};

/// Linear system could not be solved.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Composite filter search did not meet its constraints.
class FittingError : public Error {
 public:
  using Error::Error;
};

/// LUT construction could not converge the CDR or the equalizer.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Missing or inconsistent experiment configuration (including absent LUT entries).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// The long-preamble reference run produced no errors to compare against.
class BaselineError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the offending line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace ponlut
