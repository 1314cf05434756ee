#pragma once

#include <stdexcept>
#include <string>

namespace npmerge {

// Bad user input: malformed files, empty datasets, out-of-range labels.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or unexpected bytes in an on-disk container.
struct FormatError : InputError {
    explicit FormatError(const std::string& msg) : InputError(msg) {}
};

// Tensor shapes or architectures do not line up.
struct DimError : std::runtime_error {
    explicit DimError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf escaped a numeric kernel.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// An operation was called with mismatched or stale companion state.
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace npmerge
