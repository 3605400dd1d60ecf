#pragma once

#include <stdexcept>
#include <string>

namespace reits {

/// Broad failure categories; the CLI maps them to exit codes.
enum class ErrorCategory {
    config = 1,
    data = 2,
    gateway = 3,
    invariant = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Raised when an internal contract is broken (a bug, not bad input).
class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error(ErrorCategory::invariant, what) {}
};

}  // namespace reits
