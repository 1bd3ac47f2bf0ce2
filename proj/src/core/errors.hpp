#pragma once

#include <stdexcept>
#include <string>

namespace stochls {

// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A run hit a non-finite value or step/radius underflow.
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A direction provider returned a direction that breaks its own certificate.
class CertificateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace stochls
