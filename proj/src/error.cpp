#include "fidreg/error.hpp"

namespace fidreg {

FormatError::FormatError(const std::string& what, std::size_t line)
    : UsageError(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

FormatError::FormatError(Raw, const std::string& message, std::size_t line)
    : UsageError(message), line_(line) {}

FormatError FormatError::with_context(const std::string& context) const {
    return FormatError(Raw{}, context + ": " + what(), line_);
}

TruncationError::TruncationError(std::size_t expected_bytes, std::size_t actual_bytes)
    : UsageError("payload size mismatch: expected " + std::to_string(expected_bytes) +
                 " bytes, got " + std::to_string(actual_bytes)),
      expected_(expected_bytes),
      actual_(actual_bytes) {}

InsufficientMarkersError::InsufficientMarkersError(std::size_t found)
    : DomainError("insufficient markers: found " + std::to_string(found)), found_(found) {}

}  // namespace fidreg
