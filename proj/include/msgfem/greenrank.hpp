#pragma once

/** @file greenrank.hpp
    @brief Singular value decay of blocks of the inverse fine matrix between
    separated node sets.
*/

#include "msgfem/mesh.hpp"
#include "msgfem/stats.hpp"

namespace msgfem {

/// Closed axis-aligned box in physical coordinates.
struct Box {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  bool contains(const Point& p, double tol = 1e-12) const {
    return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
  }
};

struct BlockPair {
  IndexList D1;
  IndexList D2;
  double rho = 0.0;  // dist(D1, D2) / diam(D2)
};

/// Free nodes of the two boxes. Identical or touching sets violate the precondition.
BlockPair make_block_pair(const ProblemDef& problem, const Mesh2D& mesh, const Box& b1, const Box& b2);

/// Rows D1 of A^{-1} restricted to columns D2, one solve per column.
CMat green_block(const FineSolver& solver, const BlockPair& pair);
CMat green_block(const ProblemDef& problem, const Mesh2D& mesh, const BlockPair& pair);

/// Singular values of the same block, with the solves and the SVD carried out
/// with 50 significant digits. Needs a real fine matrix.
std::vector<double> green_block_sigmas_extended(const ProblemDef& problem, const Mesh2D& mesh, const BlockPair& pair);

/// Relative rounding level of the extended computation.
double extended_noise_level(const BlockPair& pair);

struct GreenBlockReport {
  std::vector<double> sigmas;
  std::vector<double> tolerances;
  std::vector<int> ranks;  // r(eps) = #{k : sigma_k > eps sigma_1}
  LinearFit fit;           // log sigma_n against sqrt(n), 1-based n over the window
  int fit_lo = 2;
  int fit_hi = 15;         // last index used, the window stops at the rounding floor
};

GreenBlockReport separability_report(const CMat& block, const std::vector<double>& tolerances, int fit_lo = 2,
                                     int fit_hi = 15);
/// Same from given descending singular values; values at or under noise * sigma_1 end the fit window.
GreenBlockReport separability_report(std::vector<double> sigmas, double noise, const std::vector<double>& tolerances,
                                     int fit_lo = 2, int fit_hi = 15);

}  // namespace msgfem
