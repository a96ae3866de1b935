#include "msgfem/types.hpp"

namespace msgfem {

const char* to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidResolution: return "invalid-resolution";
    case ErrorCode::NonpositiveCoefficient: return "nonpositive-coefficient";
    case ErrorCode::EmptyRegion: return "empty-region";
    case ErrorCode::FactorizationFailure: return "factorization-failure";
    case ErrorCode::IncompatibleCover: return "incompatible-cover";
    case ErrorCode::DegenerateOversampling: return "degenerate-oversampling";
    case ErrorCode::LocalSolveFailure: return "local-solve-failure";
    case ErrorCode::SaddleSingularity: return "saddle-singularity";
    case ErrorCode::InsufficientSpectrum: return "insufficient-spectrum";
    case ErrorCode::SolverInconsistency: return "solver-inconsistency";
    case ErrorCode::OracleTooLarge: return "oracle-too-large";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::CoarseSingularity: return "coarse-singularity";
    case ErrorCode::PreconditionViolation: return "precondition-violation";
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::RouteNotApplicable: return "route-not-applicable";
    case ErrorCode::Config: return "config-error";
    case ErrorCode::InvariantBreach: return "invariant-breach";
  }
  return "unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& what, std::optional<int> subdomain)
{
  std::string msg = std::string(to_string(code)) + ": " + what;
  if (subdomain) msg += " (subdomain " + std::to_string(*subdomain) + ")";
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& what, std::optional<int> subdomain)
    : std::runtime_error(decorate(code, what, subdomain)), code_(code), subdomain_(subdomain)
{
}

}  // namespace msgfem
