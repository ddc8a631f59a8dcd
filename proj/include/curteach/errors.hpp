#pragma once

#include <stdexcept>
#include <string>

namespace curteach {

/// Broad failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
    Usage,
    Config,
    Io,
    Validation,
    Numerical,
    Generation,
};

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Usage: return "usage";
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Validation: return "validation";
        case ErrorCategory::Numerical: return "numerical";
        case ErrorCategory::Generation: return "generation";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

class GenerationError : public Error {
public:
    explicit GenerationError(const std::string& what) : Error(ErrorCategory::Generation, what) {}
};

/// An iterative solver ran out of sweeps. Carries the last sup-norm residual.
class IterationLimitError : public Error {
public:
    IterationLimitError(const std::string& what, double residual)
        : Error(ErrorCategory::Numerical, what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace curteach
