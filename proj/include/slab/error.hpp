#pragma once

#include <stdexcept>
#include <string>

namespace slab {

/// Coarse classification of every failure the library reports. The CLI maps
/// these onto its exit-code taxonomy.
enum class ErrorKind {
    invalid_argument,   // bad config value, flag or precondition
    shape_mismatch,
    non_finite,
    infeasible_budget,  // retained density <= 0
    degenerate_spectrum,
    value_overflow,     // value not representable at the storage bit-width
    format,             // malformed .slab / SLTN / manifest content
    io,
    chain_violation,    // manifest layer dims do not chain
    missing_entry,      // tensor file lacks a referenced entry
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Distinct causes of a rejected binary stream.
enum class FormatFault {
    bad_magic,
    version_mismatch,
    truncated,
    nnz_mismatch,
    trailing_bytes,
    bad_field,
};

const char* to_string(FormatFault fault) noexcept;

class FormatError : public Error {
public:
    FormatError(FormatFault fault, const std::string& what)
        : Error(ErrorKind::format, what), fault_(fault) {}

    FormatFault fault() const noexcept { return fault_; }

private:
    FormatFault fault_;
};

}  // namespace slab
