#pragma once

#include <stdexcept>
#include <string>

namespace landtsir {

/// Bad invocation or configuration. The CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data that violates a contract. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class GeometryError : public DataError {
public:
    using DataError::DataError;
};

class OverlapError : public DataError {
public:
    OverlapError(std::string first, std::string second)
        : DataError("overlapping rasters: " + first + " and " + second)
        , first_(std::move(first))
        , second_(std::move(second))
    {
    }

    const std::string& first() const noexcept { return first_; }
    const std::string& second() const noexcept { return second_; }

private:
    std::string first_;
    std::string second_;
};

/// Unit whose polygon contains no pixel center of any raster.
class EmptyUnitError : public DataError {
public:
    explicit EmptyUnitError(const std::string& unit_id)
        : DataError("unit '" + unit_id + "' intersects no raster pixel")
        , unit_id_(unit_id)
    {
    }

    const std::string& unit_id() const noexcept { return unit_id_; }

private:
    std::string unit_id_;
};

class MissingClassError : public DataError {
public:
    explicit MissingClassError(const std::string& class_name)
        : DataError("missing landscape class '" + class_name + "'")
        , class_name_(class_name)
    {
    }

    const std::string& class_name() const noexcept { return class_name_; }

private:
    std::string class_name_;
};

class DepletionError : public DataError {
public:
    DepletionError(const std::string& unit_id, std::size_t biweek)
        : DataError("susceptible depletion in unit '" + unit_id + "' at biweek " + std::to_string(biweek))
        , unit_id_(unit_id)
        , biweek_(biweek)
    {
    }

    const std::string& unit_id() const noexcept { return unit_id_; }
    std::size_t biweek() const noexcept { return biweek_; }

private:
    std::string unit_id_;
    std::size_t biweek_;
};

class InsufficientRowsError : public DataError {
public:
    using DataError::DataError;
};

class RankDeficientError : public DataError {
public:
    explicit RankDeficientError(const std::string& column)
        : DataError("rank-deficient design: column '" + column + "' is linearly dependent on the others")
        , column_(column)
    {
    }

    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

} // namespace landtsir
