#pragma once
#include <stdexcept>
#include <string>

namespace amfm {

// Error families map 1:1 onto C API status codes / CLI exit codes.
struct ParamError : std::runtime_error {
    explicit ParamError(const std::string& m) : std::runtime_error(m) {}
};

// Bad file contents, unparsable configs, degenerate data (e.g. single-class labels).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

// Non-finite values where finite ones are required (e.g. NaN training loss).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

} // namespace amfm
