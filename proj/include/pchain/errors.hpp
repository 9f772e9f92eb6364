#pragma once

#include <stdexcept>
#include <string>

namespace pchain {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, bad configuration, out-of-range requests.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class ZeroCoupling : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class DimensionOverflow : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class GridTooLarge : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// The physical model is outside its domain of validity.
class RegimeError : public Error {
 public:
  using Error::Error;
};

class HierarchyViolation : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

class ComplexFrequency : public RegimeError {
 public:
  using RegimeError::RegimeError;
};

// Oracle measurements that could not be carried out reliably.
class FitFailure : public Error {
 public:
  using Error::Error;
};

class StateTrackingFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace pchain
