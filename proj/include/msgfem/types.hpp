#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msgfem {

using Real = double;
using Complex = std::complex<double>;

using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using CSparse = Eigen::SparseMatrix<Complex>;
using RSparse = Eigen::SparseMatrix<Real>;
using CTriplet = Eigen::Triplet<Complex>;

using Index = std::int64_t;
using IndexList = std::vector<Index>;

enum class ErrorCode {
  InvalidResolution,
  NonpositiveCoefficient,
  EmptyRegion,
  FactorizationFailure,
  IncompatibleCover,
  DegenerateOversampling,
  LocalSolveFailure,
  SaddleSingularity,
  InsufficientSpectrum,
  SolverInconsistency,
  OracleTooLarge,
  IndexOutOfRange,
  CoarseSingularity,
  PreconditionViolation,
  InvalidInput,
  RouteNotApplicable,
  Config,
  InvariantBreach,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library. Carries the subdomain that produced
/// it when the failure is local.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<int> subdomain = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<int> subdomain() const noexcept { return subdomain_; }

 private:
  ErrorCode code_;
  std::optional<int> subdomain_;
};

}  // namespace msgfem
