#pragma once

#include <stdexcept>
#include <string>

namespace smfsync {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class RankDeficientB : public Error {
 public:
  using Error::Error;
};

class CircleConditionViolated : public Error {
 public:
  using Error::Error;
};

class SpectralRadiusNotContractive : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class HorizonMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace smfsync
