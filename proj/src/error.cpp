#include "slab/error.hpp"

namespace slab {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::infeasible_budget: return "infeasible_budget";
    case ErrorKind::degenerate_spectrum: return "degenerate_spectrum";
    case ErrorKind::value_overflow: return "value_overflow";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
    case ErrorKind::chain_violation: return "chain_violation";
    case ErrorKind::missing_entry: return "missing_entry";
    }
    return "unknown";
}

const char* to_string(FormatFault fault) noexcept {
    switch (fault) {
    case FormatFault::bad_magic: return "bad_magic";
    case FormatFault::version_mismatch: return "version_mismatch";
    case FormatFault::truncated: return "truncated";
    case FormatFault::nnz_mismatch: return "nnz_mismatch";
    case FormatFault::trailing_bytes: return "trailing_bytes";
    case FormatFault::bad_field: return "bad_field";
    }
    return "unknown";
}

}  // namespace slab
