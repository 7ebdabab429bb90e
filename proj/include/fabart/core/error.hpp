#pragma once

#include <stdexcept>
#include <string>

namespace fabart {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user configuration (unknown keys, inconsistent sizes, impossible settings).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// A linear-algebra or sampling step that could not be carried out.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Inconsistent tree or model structure (e.g. a split on a missing column).
class StructuralError : public Error {
public:
    using Error::Error;
};

class WeakInstrumentError : public Error {
public:
    WeakInstrumentError(const std::string& what, double first_stage_f)
        : Error(what), first_stage_f_(first_stage_f) {}

    double first_stage_f() const noexcept { return first_stage_f_; }

private:
    double first_stage_f_;
};

}  // namespace fabart
