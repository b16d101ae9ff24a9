#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lwir {

// Every failure surfaced by the library carries one of these classes. The CLI
// prints the class name verbatim so scripts can match on it.
enum class ErrorKind {
  domain,
  constraint,
  dimension_mismatch,
  parse,
  unit_mismatch,
  non_monotone_grid,
  magic_mismatch,
  truncated,
  dim_overflow,
  kind_mismatch,
  io,
  config,
  degenerate_fit,
  all_invalid,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace lwir
