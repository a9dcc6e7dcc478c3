#pragma once

#include <stdexcept>
#include <string>

namespace elf {

// State lies outside an operation's domain (non-positive axis scale,
// negative similarity variable, off-trajectory query time, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Query outside a trajectory's integrated time span.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// A config document does not match the expected shape (missing field,
// wrong JSON type). The message carries the offending field path.
class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& path, const std::string& reason)
        : std::runtime_error(path + ": " + reason), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// A config is well-formed but violates a model invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A residual sample fell inside the exclusion band around the profile's
// support (or existence) boundary, where the fields are not smooth.
class SupportBoundaryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The base trajectory left the global regime while a Lyapunov spectrum
// was being accumulated.
class BlowupDuringLyapunov : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace elf
