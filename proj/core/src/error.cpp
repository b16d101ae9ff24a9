#include "lwir/error.hpp"

namespace lwir {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::constraint: return "constraint";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::parse: return "parse";
    case ErrorKind::unit_mismatch: return "unit_mismatch";
    case ErrorKind::non_monotone_grid: return "non_monotone_grid";
    case ErrorKind::magic_mismatch: return "magic_mismatch";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::dim_overflow: return "dim_overflow";
    case ErrorKind::kind_mismatch: return "kind_mismatch";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
    case ErrorKind::degenerate_fit: return "degenerate_fit";
    case ErrorKind::all_invalid: return "all_invalid";
  }
  return "unknown";
}

}  // namespace lwir
