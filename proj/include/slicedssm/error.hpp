#pragma once

#include <stdexcept>
#include <string>

namespace slicedssm {

/// Failure category. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    config = 1,
    data = 2,
    numerical = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

    /// Same category, message prefixed with context (stage, iteration, t0 ...).
    Error with_context(const std::string& context) const {
        return Error(kind_, context + ": " + what());
    }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& m) { return Error(ErrorKind::config, m); }
inline Error data_error(const std::string& m) { return Error(ErrorKind::data, m); }
inline Error numerical_error(const std::string& m) { return Error(ErrorKind::numerical, m); }

}  // namespace slicedssm
