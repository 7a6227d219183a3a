#ifndef CASNER_ERRORS_HPP
#define CASNER_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace casner {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// --- parsing / file format ---

class ParseError : public Error {
public:
  explicit ParseError(const std::string& msg, std::size_t line = 0)
      : Error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_ = 0;
};

class IntegrityError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class TagSequenceError : public Error {
public:
  using Error::Error;
};

// --- taxonomy ---

class UnknownNode : public Error {
public:
  using Error::Error;
};

// --- markup ---

class OverlapError : public Error {
public:
  using Error::Error;
};

class MalformedMarkup : public Error {
public:
  using Error::Error;
};

class AlignmentFailure : public Error {
public:
  using Error::Error;
};

// --- backend ---

class TransportError : public Error {
public:
  using Error::Error;
};

class TimeoutError : public Error {
public:
  using Error::Error;
};

class SchemaError : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class EmptyInput : public Error {
public:
  using Error::Error;
};

// --- classification ---

class UnparseableLabel : public Error {
public:
  using Error::Error;
};

// --- metrics ---

class DegenerateCategory : public Error {
public:
  using Error::Error;
};

class ZeroVector : public Error {
public:
  using Error::Error;
};

class DegenerateDistribution : public Error {
public:
  using Error::Error;
};

class ZeroMean : public Error {
public:
  using Error::Error;
};

// --- dyncat ---

class UnresolvableLabel : public Error {
public:
  using Error::Error;
};

// --- eval ---

class AlignmentError : public Error {
public:
  using Error::Error;
};

}  // namespace casner

#endif  // CASNER_ERRORS_HPP
