#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fidreg {

// Domain errors map to CLI exit code 1, everything else derived from
// UsageError (malformed input, I/O) maps to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class FormatError : public UsageError {
public:
    FormatError(const std::string& what, std::size_t line = 0);
    std::size_t line() const noexcept { return line_; }
    /// Same error, message prefixed with `context` (typically a file path).
    FormatError with_context(const std::string& context) const;

private:
    struct Raw {};
    FormatError(Raw, const std::string& message, std::size_t line);
    std::size_t line_;
};

class TruncationError : public UsageError {
public:
    TruncationError(std::size_t expected_bytes, std::size_t actual_bytes);
    std::size_t expected_bytes() const noexcept { return expected_; }
    std::size_t actual_bytes() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

class IoError : public UsageError {
public:
    using UsageError::UsageError;
};

class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

class PreconditionError : public UsageError {
public:
    using UsageError::UsageError;
};

class DegenerateGeometryError : public DomainError {
public:
    using DomainError::DomainError;
};

class InsufficientMarkersError : public DomainError {
public:
    explicit InsufficientMarkersError(std::size_t found);
    std::size_t found() const noexcept { return found_; }

private:
    std::size_t found_;
};

class NoMatchError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace fidreg
