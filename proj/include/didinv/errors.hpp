#pragma once

#include <stdexcept>
#include <string>

namespace didinv {

// Every failure raised by the library derives from Error so callers can
// catch one type at a boundary (the CLI maps these to exit codes).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class MonotonicityError : public Error {
public:
    using Error::Error;
};

class SchemaError : public InputError {
public:
    explicit SchemaError(std::string column)
        : InputError("missing required column: " + column), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class ParseError : public InputError {
public:
    ParseError(std::size_t row, const std::string& what)
        : InputError("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class ValidationError : public InputError {
public:
    using InputError::InputError;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace didinv
