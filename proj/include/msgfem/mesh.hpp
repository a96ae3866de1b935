#pragma once

/** @file mesh.hpp
    @brief Uniform P1 triangulation of the unit square, coefficient fields and
    finite element assembly for the three supported problem kinds.

    Nodes are numbered row-major, node (i, j) has id j*(n+1)+i and sits at
    (i/n, j/n). Each fine cell (i, j) is split along its lower-left to
    upper-right diagonal into elements 2*(j*n+i) and 2*(j*n+i)+1.

    Matrices follow the test-row convention: entry (k, l) holds B(phi_l, phi_k),
    so B(u, v) = v^H A u for nodal vectors u, v.
*/

#include "msgfem/types.hpp"

#include <array>
#include <memory>
#include <cstdint>
#include <variant>

namespace msgfem {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct BoundaryEdge {
  Index a = 0;
  Index b = 0;
  Index elem = 0;  // element owning the edge
};

struct Mesh2D {
  int n = 0;
  std::vector<Point> nodes;
  std::vector<std::array<Index, 3>> elems;
  IndexList boundary_nodes;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<double> elem_areas;
  std::vector<std::uint8_t> on_boundary;  // per node

  Index num_nodes() const { return static_cast<Index>(nodes.size()); }
  Index num_elems() const { return static_cast<Index>(elems.size()); }
  double h() const { return 1.0 / n; }
  Index node_id(int i, int j) const { return static_cast<Index>(j) * (n + 1) + i; }
  Point centroid(Index e) const;
};

/// Throws InvalidResolution for n < 2.
Mesh2D build_unit_square_mesh(int n);

namespace coeff {
struct Constant {
  double value = 1.0;
};
/// p x p checkerboard on the unit square; cell (0,0) carries lo.
struct Checkerboard {
  int cells = 2;
  double lo = 1.0;
  double hi = 1.0;
};
/// Independent log-uniform samples in [lo, hi], one per fine cell.
struct RandomContrast {
  double lo = 1.0;
  double hi = 1.0;
};
}  // namespace coeff

using CoefficientSpec = std::variant<coeff::Constant, coeff::Checkerboard, coeff::RandomContrast>;

std::vector<double> make_coefficient(const CoefficientSpec& spec, const Mesh2D& mesh, std::uint64_t seed);

enum class ProblemKind { Diffusion, ConvectionDiffusion, Helmholtz };
enum class ScalarField { Real, Complex };

const char* to_string(ProblemKind kind);

struct ProblemDef {
  ProblemKind kind = ProblemKind::Diffusion;
  std::vector<double> a;                     // per element, > 0
  std::vector<std::array<double, 2>> b;      // per element, ConvectionDiffusion only
  double k = 0.0;                            // wavenumber, Helmholtz only
  std::vector<double> V;                     // per element, Helmholtz only
  std::vector<double> beta;                  // per boundary edge, Helmholtz only
  std::vector<double> f;                     // per node
  std::vector<double> g;                     // per boundary edge

  ScalarField scalar_field() const {
    return kind == ProblemKind::Helmholtz ? ScalarField::Complex : ScalarField::Real;
  }
  /// Zero Dirichlet data on the whole outer boundary (Diffusion and ConvectionDiffusion).
  bool dirichlet() const { return kind != ProblemKind::Helmholtz; }
  double a_min() const;
  double a_max() const;
  double v_max() const;
};

/// Fills in the per-element and per-edge arrays with uniform defaults for the
/// fields the kind does not use, then checks the invariants.
void validate(ProblemDef& problem, const Mesh2D& mesh);

enum class FormKind { B, Bplus, BplusK, Mass };
enum class Symmetry { Symmetric, Hermitian, General };

struct SparseForm {
  CSparse matrix;  // num_nodes x num_nodes, zero outside the region
  Symmetry symmetry = Symmetry::General;
};

/// Exact P1 integration with per-element constant coefficients over the
/// elements listed in elem_set. For Helmholtz the B form also carries the
/// boundary term of the edges of elem_set on the outer boundary: -i k beta for
/// k > 0, and a real Robin mass beta when k = 0.
SparseForm assemble_form(const ProblemDef& problem, const Mesh2D& mesh, FormKind form,
                         const IndexList& elem_set);

/// Same, over all elements.
SparseForm assemble_form(const ProblemDef& problem, const Mesh2D& mesh, FormKind form);

/// Sparse F with F^H F equal to the assembled Bplus, BplusK or Mass form over
/// elem_set, built element by element from exact local factors.
CSparse assemble_form_factor(const ProblemDef& problem, const Mesh2D& mesh, FormKind form,
                             const IndexList& elem_set);

/// Edge mass  sum_e w_e \int_e u v  over outer boundary edges whose element
/// lies in elem_set (all edges if elem_set is empty).
CSparse assemble_boundary_mass(const Mesh2D& mesh, const std::vector<double>& weight,
                               const IndexList& elem_set = {});

/// Load vector F(v) = \int f_h v + \int_Gamma g v (boundary part for Helmholtz only).
CVec assemble_load(const ProblemDef& problem, const Mesh2D& mesh);

IndexList all_elements(const Mesh2D& mesh);

/// Nodes carrying unknowns: all nodes for Helmholtz, interior nodes otherwise.
IndexList free_nodes(const ProblemDef& problem, const Mesh2D& mesh);

/// Factorization of the global fine system, reusable across right-hand sides.
class FineSolver {
 public:
  FineSolver(const ProblemDef& problem, const Mesh2D& mesh);
  ~FineSolver();
  FineSolver(FineSolver&&) noexcept;
  FineSolver& operator=(FineSolver&&) noexcept;

  /// Solves A u = rhs on the free nodes; rhs and the result are full nodal vectors.
  CVec solve(const CVec& rhs) const;
  CMat solve(const CMat& rhs) const;
  const CSparse& matrix() const { return A_; }
  const IndexList& free() const { return free_; }
  /// position of a node in the free list, -1 if eliminated
  Index free_position(Index node) const { return position_[static_cast<std::size_t>(node)]; }

 private:
  struct Impl;
  CSparse A_;
  IndexList free_;
  std::vector<Index> position_;
  std::unique_ptr<Impl> impl_;
};

/// Ground-truth fine solution u_h; Dirichlet nodes are zero.
CVec solve_fine_reference(const ProblemDef& problem, const Mesh2D& mesh);

/// sqrt(u^H M u) for a Hermitian PSD matrix M.
double form_norm(const CSparse& M, const CVec& u);

/// Extracts the submatrix M(rows, cols).
CSparse extract(const CSparse& M, const IndexList& rows, const IndexList& cols);

}  // namespace msgfem
