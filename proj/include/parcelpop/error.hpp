#pragma once

#include <stdexcept>
#include <string>

namespace parcelpop {

// Bad or missing user input: file, schema, config, or a violated
// precondition on data. Maps to CLI exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model fitting failed (separation, singular information matrix).
class FitError : public InputError {
public:
    using InputError::InputError;
};

} // namespace parcelpop
