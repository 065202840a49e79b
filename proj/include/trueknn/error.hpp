#pragma once

#include <stdexcept>
#include <string>

namespace trueknn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data cannot support the requested operation (empty set, n <= k, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A parameter is outside its documented domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A dataset file could not be read or parsed.
class DataError : public Error {
public:
    using Error::Error;
};

/// Every sampled neighbor distance was zero, so no start radius exists.
class DegenerateDataset : public Error {
public:
    using Error::Error;
};

}  // namespace trueknn
