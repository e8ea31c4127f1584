#pragma once

#include <stdexcept>
#include <string>

namespace cardiomech {

// Invalid inputs, malformed files, bad configuration. CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during optimization (NaN loss, divergence). CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Volume file I/O failures, tagged with the failure kind.
class IoError : public ValidationError {
public:
    enum class Kind {
        MalformedHeader,
        TruncatedPayload,
        UnknownElementType,
        SchemaViolation,
        FileAccess,
    };

    IoError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

} // namespace cardiomech
