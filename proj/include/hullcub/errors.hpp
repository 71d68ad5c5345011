#pragma once

#include <stdexcept>
#include <string>

namespace hullcub {

// Error taxonomy. FormatError maps to CLI exit code 2 (bad input),
// everything else surfaces as a failed check (exit code 1) or a thrown
// condition the caller is expected to handle.

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input documents, schema violations, disconnected graphs, etc.
struct FormatError : Error {
    using Error::Error;
};

// Bad arguments to an operation (empty sets, unknown ids, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Size guards exceeded (n^4 scans, Steiner terminals, enumeration limits).
struct CapacityError : Error {
    using Error::Error;
};

// Parameter gates violated (cluster constants, net constants, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Inputs that fail an epsilon-setup / well-layered precondition.
struct SetupError : Error {
    using Error::Error;
};

// Planar geometry that cannot be realized (triangle inequality violations).
struct GeometryError : Error {
    using Error::Error;
};

// No witness exists (diacenter with too small a constant).
struct InfeasibleError : Error {
    using Error::Error;
};

// A pipeline invariant failed mid-construction; carries the violated clause.
struct PipelineError : Error {
    using Error::Error;
};

}  // namespace hullcub
