#pragma once

#include <stdexcept>
#include <string>

namespace symbar {

// Root of every error raised by the library. Callers that only need a
// diagnostic can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The same isometry was reached by words of opposite parity, so the
// word-length character is not well defined on the generated group.
class CharacterInconsistency : public Error {
 public:
  using Error::Error;
};

// Two enumerated chambers overlap.
class ChamberCollision : public Error {
 public:
  using Error::Error;
};

// A stochastic-volatility model whose volatility block reads the asset.
class StructureError : public Error {
 public:
  using Error::Error;
};

// Too many paths produced non-finite states or coefficients.
class NonFinitePath : public Error {
 public:
  using Error::Error;
};

class SingularBoundary : public Error {
 public:
  using Error::Error;
};

class InversionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace symbar
