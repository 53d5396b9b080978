#pragma once

#include <stdexcept>
#include <string>

namespace tre {

/// Base of every error raised by the library. The CLI maps these to exit
/// code 2 (input/usage error).
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class empty_input_error : public error {
 public:
  using error::error;
};

class bounds_error : public error {
 public:
  using error::error;
};

class order_error : public error {
 public:
  using error::error;
};

/// A model assigned probability zero to an event that was observed.
class zero_probability_error : public error {
 public:
  using error::error;
};

/// A conditional was queried for a context whose marginal is zero.
class zero_context_error : public error {
 public:
  using error::error;
};

class non_stationary_error : public error {
 public:
  using error::error;
};

class convergence_error : public error {
 public:
  using error::error;
};

class format_error : public error {
 public:
  using error::error;
};

}  // namespace tre
