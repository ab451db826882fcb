#pragma once
#include <stdexcept>
#include <string>

namespace sgl {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Bad shapes, bad labels, out-of-range parameters.
class InvalidInput : public Error
{
public:
    using Error::Error;
};

class NumericalError : public Error
{
public:
    using Error::Error;
};

// Input is well formed but carries no usable information
// (identical samples, all-zero weights).
class DegenerateData : public Error
{
public:
    using Error::Error;
};

class StepSizeError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

class LoadError : public Error
{
public:
    LoadError(const std::string& msg, long row, long col)
        : Error(msg + " (row " + std::to_string(row) + ", column " + std::to_string(col) + ")"),
          row_(row), col_(col)
    {}
    long row() const noexcept { return row_; }
    long col() const noexcept { return col_; }

private:
    long row_;
    long col_;
};

} // namespace sgl
