#pragma once

#include <stdexcept>
#include <string>

namespace msboot {

// Error taxonomy mapped to CLI exit codes (see README):
//   0 success, 2 parse, 3 config, 4 fit, 5 numeric, 6 io.

class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(format(msg, line, column)), line_(line), column_(column) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    static std::string format(const std::string& msg, std::size_t line, std::size_t col) {
        if (line == 0) return msg;
        std::string s = "line " + std::to_string(line);
        if (col > 0) s += ", column " + std::to_string(col);
        return s + ": " + msg;
    }
    std::size_t line_;
    std::size_t column_;
};

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model fitting failed or had too little usable data.
class fit_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Domain violations and numeric overflow/underflow with diagnostics.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExitCode : int {
    ok = 0,
    parse = 2,
    config = 3,
    fit = 4,
    numeric = 5,
    io = 6,
};

} // namespace msboot
