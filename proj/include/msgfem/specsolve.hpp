#pragma once

/** @file specsolve.hpp
    @brief Constrained local eigenproblem
      P(phi, v) = lambda B+(phi, v)  over the discrete B-harmonic space on omega_star,
    solved by a saddle-point route, a factorize-once reduced route for
    Hermitian B, and a dense oracle on an explicit harmonic basis that takes
    singular values of the factored forms in quadruple precision for real
    forms and long double otherwise.
*/

#include "msgfem/localops.hpp"

namespace msgfem {

enum class Route { Mixed, Reduced, Oracle };

const char* to_string(Route route);
Route parse_route(const std::string& name);

struct LocalBasis {
  int subdomain = 0;
  Route route = Route::Mixed;
  std::vector<double> lambdas;  // every resolved eigenvalue, non-ascending
  CMat vectors;                 // local dofs x n_ev, B+-orthonormal, may run past the resolved ones
  CMat kernel;                  // local dofs x l
  double imag_residue = 0.0;
  double floor = 0.0;           // resolution * lambda_max, upper bound for every discarded eigenvalue

  int kernel_count() const { return static_cast<int>(kernel.cols()); }
  int count() const { return static_cast<int>(vectors.cols()); }
  /// lambda_{m+1} of the non-kernel spectrum; past the resolved spectrum the floor.
  double lambda_after(int m) const;
};

struct EigenOptions {
  /// Number of eigenvectors kept; 0 keeps the resolved ones.
  int n_ev = 0;
  /// Eigenvalues at or below this fraction of the largest one are not resolved in
  /// double precision and are grouped with the infinite-mu family. The oracle
  /// works with sqrt(lambda) and uses the square of this fraction, so 1e-30
  /// suits it on real forms.
  double filter = 1e-9;
  /// When set, the reduced route compares its spectrum against it.
  const LocalBasis* reference = nullptr;
  double consistency_tol = 1e-6;
  /// Dense size guard for the oracle route.
  Index oracle_limit = 600;
};

LocalBasis solve_mixed_eigen(const LocalProblem& local, const EigenOptions& opt = {});
LocalBasis solve_reduced_elliptic(const LocalProblem& local, const EigenOptions& opt = {});
LocalBasis oracle_harmonic_eigen(const LocalProblem& local, const EigenOptions& opt = {});
LocalBasis solve_local(const LocalProblem& local, Route route, const EigenOptions& opt = {});

/// Harmonic extensions of the unit vectors on I2 (dofs x n2).
CMat harmonic_basis(const LocalProblem& local, Index limit = 600);

/// Kernel-augmented reduced matrix [[B+, P K], [(P K)^H, 0]]; exposed for rank checks.
CSparse augmented_bplus(const LocalProblem& local);

/// d_n = lambda_{n+1}^{1/2}; index error when n is past the computed spectrum.
double local_error_certificate(const LocalBasis& basis, int n);

/// P_gram norm of r minus its P_gram-orthogonal projection onto the kernel and
/// the first n eigenvectors.
double local_projection_error(const LocalProblem& local, const LocalBasis& basis, const CVec& r, int n);

/// Largest relative discrepancy over the first count finite eigenvalues.
double spectrum_discrepancy(const LocalBasis& a, const LocalBasis& b, int count);

}  // namespace msgfem
