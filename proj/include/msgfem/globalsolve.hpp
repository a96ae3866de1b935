#pragma once

/** @file globalsolve.hpp
    @brief Glued trial space u^p + span{chi_i phi_ij}, the coarse Galerkin
    solve and error measurement against the fine reference.
*/

#include "msgfem/specsolve.hpp"

namespace msgfem {

struct GlobalSpace {
  CMat basis;                    // num_nodes x total_dim, subdomain-major
  CVec particular;               // sum_i chi_i psi_i
  std::vector<int> dims;         // n_i
  std::vector<int> kernel_counts;
  std::vector<int> owner;        // subdomain of each column

  int total_dim() const { return static_cast<int>(basis.cols()); }
};

/// particulars are local vectors on each subdomain's dofs. dims[i] counts
/// kernel vectors first, so l_i <= dims[i] <= l_i + eigenvectors computed.
GlobalSpace build_global_space(const Mesh2D& mesh, const Cover& cover, const std::vector<LocalProblem>& locals,
                               const std::vector<LocalBasis>& bases, const std::vector<CVec>& particulars,
                               const std::vector<int>& dims);

struct GlobalSolution {
  CVec coeffs;
  CVec u_G;
  double err_energy_rel = 0.0;
  double err_l2_rel = 0.0;
  double bound = 0.0;
  double galerkin_residual = 0.0;
  std::vector<int> pruned;       // dependent columns removed before the solve
};

/// Coarse solve. When u_h is given, relative errors and the Galerkin
/// orthogonality residual are measured against it.
GlobalSolution galerkin_solve(const ProblemDef& problem, const Mesh2D& mesh, const GlobalSpace& space,
                              const CVec* u_h = nullptr);

/// sqrt(zeta zeta*) max_i lambda_{i, n_i - l_i + 1}^{1/2}.
double error_bound(const Cover& cover, const std::vector<LocalBasis>& bases, const std::vector<int>& dims);

/// Smallest n_i = l_i + m, m >= 1, with lambda_{i, m+1} <= tau^2 / (zeta zeta*).
std::vector<int> select_dims(const std::vector<LocalBasis>& bases, const Cover& cover, double tau);

/// Energy matrix of the global error norm: B+ for elliptic kinds, B+_k for Helmholtz.
CSparse energy_matrix(const ProblemDef& problem, const Mesh2D& mesh);

}  // namespace msgfem
