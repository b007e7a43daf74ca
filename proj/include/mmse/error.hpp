#pragma once

#include <stdexcept>
#include <string>

namespace mmse {

enum class Errc {
  invalid_input,
  singular_diagonal,      // D has a non-positive entry, D^{-1} undefined
  not_positive_definite,  // Cholesky pivot below tolerance
  singular,               // triangular solve hit a zero diagonal
  numerical_consistency,  // a theoretically real quantity has a large imaginary part
  degenerate_user,        // all-zero channel column
  degenerate_npi,         // NPI <= 0 at SINR computation
  out_of_domain,          // analytic result undefined for the arguments (e.g. B <= 4)
  range,                  // fixed-point value outside a table range
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mmse
