#pragma once

#include <stdexcept>
#include <string>

namespace meagraph {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: ConfigError -> 2, DataError/ShapeError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid options, hyperparameters, or config-file contents.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (files, labels, indices).
class DataError : public Error {
public:
    using Error::Error;
};

// Dimension mismatches between matrices, models, and datasets.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Numerical failures: rank deficiency, non-finite values.
class NumericError : public Error {
public:
    using Error::Error;
};

// Operations invoked in the wrong state (untrained model, consumed tape).
class StateError : public Error {
public:
    using Error::Error;
};

} // namespace meagraph
