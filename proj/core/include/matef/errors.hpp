#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace matef {

/// Base class for all harness errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration, manifest, CLI arguments or rejected input data.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Store open/integrity/constraint failures.
class StoreError : public Error {
public:
    using Error::Error;
};

/// Guest backend provisioning or execution faults.
class BackendError : public Error {
public:
    using Error::Error;
};

/// Statistical analysis failures (missing datasets, empty joins, degenerate input).
class AnalysisError : public Error {
public:
    using Error::Error;
};

/// Document/log parse failure carrying a position. line/column are 1-based;
/// 0 means unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
        : Error(format(msg, line, column)), line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    static std::string format(const std::string& msg, std::size_t line, std::size_t column) {
        if (line == 0) return msg;
        std::string out = msg + " (line " + std::to_string(line);
        if (column != 0) out += ", column " + std::to_string(column);
        out += ")";
        return out;
    }

    std::size_t line_;
    std::size_t column_;
};

}  // namespace matef
