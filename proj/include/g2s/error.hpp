// error.hpp - exception hierarchy shared by all g2s components.

#pragma once

#include <stdexcept>
#include <string>

namespace g2s {

// Base for everything this toolkit throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed textual input (PENMAN, CoNLL, JSONL). Carries line/column when known.
struct ParseError : Error {
    ParseError(const std::string& msg, int line = -1, int col = -1)
        : Error(format(msg, line, col)), line(line), col(col) {}
    int line;
    int col;

private:
    static std::string format(const std::string& msg, int line, int col) {
        std::string out = msg;
        if (line >= 0) {
            out += " (line " + std::to_string(line);
            if (col >= 0) out += ", col " + std::to_string(col);
            out += ")";
        }
        return out;
    }
};

// Structural invariant violated (duplicate ids, dangling endpoints, bad config).
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Tensor shape mismatch; message names the operation and the offending shapes.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Non-finite loss or other unrecoverable failure inside the training loop.
struct TrainingError : Error {
    explicit TrainingError(const std::string& msg) : Error(msg) {}
};

}  // namespace g2s
