#pragma once

#include <stdexcept>
#include <string>

namespace dlme {

/// Failure classes; the CLI maps each to its own exit code.
enum class ErrorKind {
    Parse,
    Validation,
    Solver,
    Infeasible,
    Numerical,
    Usage,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace dlme
