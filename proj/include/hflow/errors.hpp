#pragma once

#include <stdexcept>
#include <string>

namespace hflow {

// Error taxonomy mirrored by the CLI exit codes: validation -> 1, io -> 2,
// numeric/domain -> 3.  Every throw site supplies a human-readable message
// naming the offending field or file offset.

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hflow
