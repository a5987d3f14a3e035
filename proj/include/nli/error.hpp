#pragma once

#include <stdexcept>
#include <string>

namespace nli {

// Failure categories. The CLI maps these onto its fixed exit-code table.
enum class ErrorKind {
    domain,               // argument outside an operation's domain
    contract,             // caller broke a precondition (e.g. unsorted stream)
    resource,             // request would exceed a hard size limit
    config,               // run document failed validation
    io,                   // file could not be opened / read / written
    format,               // file content is not a valid timetag file
    undefined_visibility, // no counts to form a visibility from
    over_subtraction,     // background estimate consumes the whole signal
    empty_result,         // analysis produced no coincidences
    singular_fit,         // degenerate design matrix
    ambiguous_harmonic,   // n=1 and n=2 describe the data equally well
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace nli
