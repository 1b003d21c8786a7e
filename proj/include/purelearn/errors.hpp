#pragma once

#include <stdexcept>
#include <string>

namespace pl {

// Base for all library errors. The CLI maps subclasses to exit codes:
// config 2, io/format 3, numerical 4.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed artifact files; carries the byte offset where parsing failed.
struct FormatError : Error {
    FormatError(const std::string& msg, size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    size_t offset;
};

// Non-finite values are never propagated; any NaN/Inf is a hard error.
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace pl
