#pragma once

/** @file localops.hpp
    @brief Per-subdomain matrices on the oversampling domain, local particular
    solves and discrete harmonic extensions.

    Local dofs are the nodes of omega_star minus Dirichlet nodes, ordered with
    the interior block I1 first and the artificial-boundary block I2 last.
*/

#include "msgfem/cover.hpp"

#include <memory>

namespace msgfem {

struct LocalFactor;

struct LocalProblem {
  int id = 0;
  ProblemKind kind = ProblemKind::Diffusion;
  double k = 0.0;
  IndexList dofs;                  // global node ids, I1 then I2
  std::vector<Index> local_of;     // global node -> local dof, -1 outside
  Index n1 = 0;
  Index n2 = 0;
  RVec chi;                        // chi on local dofs
  IndexList J;                     // local dofs with chi != 0

  CSparse B_star;                  // B over omega_star
  CSparse Bplus_star;              // stiffness over omega_star
  CSparse P_gram;                  // Diag(chi) E Diag(chi), E the energy form over omega
  CSparse P_factor;                // F^H F = P_gram
  Symmetry b_symmetry = Symmetry::General;
  bool b_is_bplus = false;         // B_star == Bplus_star entrywise
  CMat kernel;                     // dofs x l, columns of the analytic kernel

  std::shared_ptr<const LocalFactor> a11;  // factorization of B_star(I1, I1)

  Index size() const { return n1 + n2; }
  int kernel_count() const { return static_cast<int>(kernel.cols()); }

  /// Restriction of a global nodal vector to the local dofs.
  CVec restrict_global(const CVec& u) const;
  /// Zero extension of a local vector to all nodes.
  CVec extend(const CVec& v, Index num_nodes) const;
};

LocalProblem assemble_local(const ProblemDef& problem, const Mesh2D& mesh, const Subdomain& sub);

/// psi with psi|I2 = 0 and B_star(I1, :) psi = F|I1.
CVec solve_particular(const LocalProblem& local, const CVec& F_local);

/// Columns of boundary_values live on I2; the result agrees with them on I2
/// and satisfies B_star(I1, :) v = 0.
CMat harmonic_extension(const LocalProblem& local, const CMat& boundary_values);
CVec harmonic_extension(const LocalProblem& local, const CVec& boundary_values);

/// max over columns of |B_star(I1, :) v| / (|B_star| |v|), infinity norms.
double harmonic_residual(const LocalProblem& local, const CMat& v);

/// Hermitian part check used by the eigen routes.
double hermitian_defect(const CMat& A);

/// Infinity norm of a sparse matrix (max row sum).
double sparse_inf_norm(const CSparse& A);

}  // namespace msgfem
