#include "twoball/errors.hpp"

namespace twoball {

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidDomain: return "invalid-domain";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::PropertyViolation: return "property-violation";
    case ErrorKind::PreconditionViolation: return "precondition-violation";
    case ErrorKind::SearchFailure: return "search-failure";
    case ErrorKind::UnreliableSampling: return "unreliable-sampling";
    case ErrorKind::RemeshRequest: return "remesh-request";
    }
    return "unknown";
}

void rethrow_with_stage(const Error& e, const std::string& stage)
{
    throw Error(e.kind(), "[" + stage + "] " + e.detail());
}

} // namespace twoball
