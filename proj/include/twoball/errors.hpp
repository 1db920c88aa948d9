#pragma once

#include <stdexcept>
#include <string>

namespace twoball {

/// Failure categories surfaced by the toolkit. The CLI maps these to exit codes
/// and stage messages; tests match on them.
enum class ErrorKind {
    InvalidArgument,
    InvalidDomain,
    OutOfDomain,
    NumericalFailure,
    PropertyViolation,
    PreconditionViolation,
    SearchFailure,
    UnreliableSampling,
    RemeshRequest,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

#define TWOBALL_DEFINE_ERROR(Name, Kind)                                        \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    }

TWOBALL_DEFINE_ERROR(InvalidArgument, InvalidArgument);
TWOBALL_DEFINE_ERROR(InvalidDomain, InvalidDomain);
TWOBALL_DEFINE_ERROR(OutOfDomain, OutOfDomain);
TWOBALL_DEFINE_ERROR(NumericalFailure, NumericalFailure);
TWOBALL_DEFINE_ERROR(PropertyViolation, PropertyViolation);
TWOBALL_DEFINE_ERROR(PreconditionViolation, PreconditionViolation);
TWOBALL_DEFINE_ERROR(SearchFailure, SearchFailure);
TWOBALL_DEFINE_ERROR(UnreliableSampling, UnreliableSampling);
TWOBALL_DEFINE_ERROR(RemeshRequest, RemeshRequest);

#undef TWOBALL_DEFINE_ERROR

/// Prefixes a pipeline stage name onto an error while keeping its kind.
[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage);

} // namespace twoball
