#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsad {

/// Problems with input data: unreadable files, malformed records, bad labels.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed record. `row` is 1-based and counts the header as row 1; 0 when unknown.
class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column = 0)
        : InputError(what), row_(row), column_(column) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class SchemaError : public InputError {
public:
    using InputError::InputError;
};

class OrderingError : public InputError {
public:
    using InputError::InputError;
};

/// Labels contain a single class where both are required.
class DegenerateLabelsError : public InputError {
public:
    using InputError::InputError;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that makes a statistic undefined, e.g. a constant series.
class DegenerateInputError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace tsad
