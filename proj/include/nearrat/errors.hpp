#pragma once

#include <stdexcept>
#include <string>

namespace nearrat {

// Root of every error the library throws. Subclasses name the failure class so
// the CLI can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An operation would exceed its configured evaluation budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// Lattice enumeration blew up (radius or node count); carries a diagnostic.
class NumericOverflow : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// A derivative order beyond what the map provides was requested.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace nearrat
