#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gunloc {

enum class ErrorKind {
    InvalidInput,
    DomainError,
    InsufficientSensors,
    DegenerateGeometry,
    NoConvergence,
    AmbiguousSolution,
    NoConsistentSet,
    InsufficientSolutions,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so callers
/// (the CLI in particular) can map them to exit codes and reports.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace gunloc
