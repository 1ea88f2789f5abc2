#pragma once

#include <stdexcept>
#include <string>

namespace chanmatch {

// Base of all library exceptions.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad parameters, inconsistent configuration, malformed input files.
class config_error : public error {
public:
  using error::error;
};

class io_error : public error {
public:
  using error::error;
};

// Raised when a numerical fit or estimate is ill-posed.
class estimation_error : public error {
public:
  using error::error;
};

class construction_error : public error {
public:
  using error::error;
};

// The adaptive split-step integrator could not meet its local error target.
class convergence_error : public error {
public:
  using error::error;
};

} // namespace chanmatch
