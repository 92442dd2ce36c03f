#pragma once

/**
 * Exception hierarchy for the pavd library.
 *
 * Every throwing code path uses a subclass of pavd::Error so callers can
 * catch library failures separately from standard-library ones.  Conditions
 * that are expected outcomes of an analysis (a divergent series, an
 * inconclusive diagnostic, an extinct replica) are reported through status
 * enums on the result types instead; exceptions are reserved for contract
 * violations and unusable inputs.
 */

#include <stdexcept>
#include <string>

namespace pavd {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A model specification could not be parsed or validated.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(what) {}
};

/// A model family name was not recognised.  A schema violation: the family
/// is part of the configuration vocabulary, so validation that catches
/// SchemaError must see this too.
class UnknownModelError : public SchemaError {
 public:
  explicit UnknownModelError(const std::string& what) : SchemaError(what) {}
};

/// An inverse or evaluation was requested outside the attainable range.
class OutOfRangeError : public Error {
 public:
  explicit OutOfRangeError(const std::string& what) : Error(what) {}
};

/// A quantity requiring the limiting death rate was requested but the limit
/// is not declared, not implied by the model family, and not estimable.
class MissingDeathLimitError : public Error {
 public:
  explicit MissingDeathLimitError(const std::string& what) : Error(what) {}
};

/// A numerical iteration produced a non-finite or out-of-domain value.
class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& what) : Error(what) {}
};

/// A simulator was advanced after the process had already died.
class SteppedAfterDeathError : public Error {
 public:
  explicit SteppedAfterDeathError(const std::string& what) : Error(what) {}
};

/// A selection was requested from a state with no alive vertices.
class EmptyAliveSetError : public Error {
 public:
  explicit EmptyAliveSetError(const std::string& what) : Error(what) {}
};

/// An experiment was invoked on a model whose diagnosed regime does not
/// support it.
class WrongRegimeError : public Error {
 public:
  explicit WrongRegimeError(const std::string& what) : Error(what) {}
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace pavd
