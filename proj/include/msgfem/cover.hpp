#pragma once

/** @file cover.hpp
    @brief Overlapping rectangular cover of the unit square, oversampling
    domains and the nodal partition of unity.
*/

#include "msgfem/mesh.hpp"

namespace msgfem {

/// Closed rectangle of fine cells [x0, x1) x [y0, y1); its nodes span x0..x1, y0..y1.
struct CellRect {
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;

  bool operator==(const CellRect&) const = default;
  bool contains_node(int i, int j) const { return i >= x0 && i <= x1 && j >= y0 && j <= y1; }
  /// Expands by layers, clipped to [0, n].
  CellRect grown(int lx, int ly, int n) const;
};

struct Subdomain {
  int id = 0;
  int cx = 0, cy = 0;       // coarse cell indices
  CellRect core;
  CellRect omega;
  CellRect omega_star;
  IndexList omega_nodes;
  IndexList omega_elems;
  IndexList omega_star_nodes;
  IndexList omega_star_elems;
  IndexList omega_star_interior_nodes;  // off the artificial boundary (may include outer boundary nodes)
  IndexList omega_star_boundary_nodes;  // on an artificial side of omega_star
  std::vector<double> chi;              // global length
  bool touches_boundary = false;        // omega_star meets the outer boundary

  /// Artificial sides of omega_star: bitmask left=1, right=2, bottom=4, top=8.
  int artificial_sides = 0;
};

/// Builds a subdomain from explicit rectangles. chi is left at zero.
Subdomain make_subdomain(const Mesh2D& mesh, int id, const CellRect& core, const CellRect& omega,
                         const CellRect& omega_star);

struct Cover {
  int mx = 1, my = 1;
  int overlap = 1;
  int oversampling = 1;
  std::vector<Subdomain> subdomains;
  int zeta = 1;
  int zeta_star = 1;

  int size() const { return static_cast<int>(subdomains.size()); }
  /// Subdomain id of coarse cell (cx, cy).
  int id_of(int cx, int cy) const { return cy * mx + cx; }
};

Cover build_cover(const Mesh2D& mesh, int mx, int my, int overlap, int oversampling);

/// chi_i .* u for every subdomain.
std::vector<RVec> pou_apply(const Cover& cover, const RVec& u);
std::vector<CVec> pou_apply(const Cover& cover, const CVec& u);

/// (zeta, zeta_star) recomputed from node multiplicities.
std::pair<int, int> cover_constants(const Cover& cover, const Mesh2D& mesh);

}  // namespace msgfem
