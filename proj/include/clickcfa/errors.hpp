#pragma once

#include <stdexcept>
#include <string>

namespace clickcfa {

enum class ErrorKind {
    Usage,           // bad CLI/config input
    Io,              // unreadable/unwritable file
    MalformedRecord, // a single bad record (thrown only outside skip-and-count contexts)
    CorpusRejected,  // too many malformed lines
    InvalidScore,    // points_awarded > points_max
    EmptyEncoding,   // no events before the quiz answer
    Degenerate,      // degenerate numeric input (non-stochastic matrix, indistinct points, ...)
    Diverged,        // NaN during training
    Logic            // internal contract violation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

} // namespace clickcfa
