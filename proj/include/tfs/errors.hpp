#pragma once

#include <stdexcept>
#include <string>

namespace tfs {

// Error categories map one-to-one onto CLI exit codes (see tools/tfs.cpp).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller broke a precondition (shape mismatch, bad argument).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace tfs
