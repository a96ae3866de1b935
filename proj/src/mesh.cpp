#include "msgfem/mesh.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <random>

namespace msgfem {

Point Mesh2D::centroid(Index e) const
{
  const auto& t = elems[static_cast<std::size_t>(e)];
  Point c;
  for (Index v : t) {
    c.x += nodes[static_cast<std::size_t>(v)].x / 3.0;
    c.y += nodes[static_cast<std::size_t>(v)].y / 3.0;
  }
  return c;
}

Mesh2D build_unit_square_mesh(int n)
{
  if (n < 2) throw Error(ErrorCode::InvalidResolution, "mesh resolution must be at least 2, got " + std::to_string(n));

  Mesh2D mesh;
  mesh.n = n;
  const double h = 1.0 / n;
  mesh.nodes.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  mesh.on_boundary.assign(static_cast<std::size_t>((n + 1) * (n + 1)), 0);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      mesh.nodes.push_back({i * h, j * h});
      if (i == 0 || j == 0 || i == n || j == n) {
        mesh.boundary_nodes.push_back(mesh.node_id(i, j));
        mesh.on_boundary[static_cast<std::size_t>(mesh.node_id(i, j))] = 1;
      }
    }

  mesh.elems.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Index v00 = mesh.node_id(i, j), v10 = mesh.node_id(i + 1, j);
      const Index v11 = mesh.node_id(i + 1, j + 1), v01 = mesh.node_id(i, j + 1);
      mesh.elems.push_back({v00, v10, v11});
      mesh.elems.push_back({v00, v11, v01});
    }
  mesh.elem_areas.assign(mesh.elems.size(), 0.5 * h * h);

  auto lower = [n](int i, int j) { return static_cast<Index>(2 * (j * n + i)); };
  for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({mesh.node_id(i, 0), mesh.node_id(i + 1, 0), lower(i, 0)});
  for (int j = 0; j < n; ++j)
    mesh.boundary_edges.push_back({mesh.node_id(n, j), mesh.node_id(n, j + 1), lower(n - 1, j)});
  for (int i = 0; i < n; ++i)
    mesh.boundary_edges.push_back({mesh.node_id(i + 1, n), mesh.node_id(i, n), lower(i, n - 1) + 1});
  for (int j = 0; j < n; ++j)
    mesh.boundary_edges.push_back({mesh.node_id(0, j + 1), mesh.node_id(0, j), lower(0, j) + 1});
  return mesh;
}

std::vector<double> make_coefficient(const CoefficientSpec& spec, const Mesh2D& mesh, std::uint64_t seed)
{
  std::vector<double> field(static_cast<std::size_t>(mesh.num_elems()));
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, coeff::Constant>) {
          if (s.value <= 0) throw Error(ErrorCode::NonpositiveCoefficient, "constant coefficient must be positive");
          std::fill(field.begin(), field.end(), s.value);
        }
        else if constexpr (std::is_same_v<S, coeff::Checkerboard>) {
          if (s.lo <= 0 || s.hi <= 0) throw Error(ErrorCode::NonpositiveCoefficient, "checkerboard values must be positive");
          if (s.cells < 1) throw Error(ErrorCode::InvalidInput, "checkerboard needs at least one cell per side");
          for (Index e = 0; e < mesh.num_elems(); ++e) {
            const Point c = mesh.centroid(e);
            const int cx = std::min(s.cells - 1, static_cast<int>(std::floor(c.x * s.cells)));
            const int cy = std::min(s.cells - 1, static_cast<int>(std::floor(c.y * s.cells)));
            field[static_cast<std::size_t>(e)] = ((cx + cy) % 2 == 0) ? s.lo : s.hi;
          }
        }
        else {
          if (s.lo <= 0 || s.hi < s.lo)
            throw Error(ErrorCode::NonpositiveCoefficient, "random contrast needs 0 < lo <= hi");
          std::mt19937_64 rng(seed);
          std::uniform_real_distribution<double> unit(0.0, 1.0);
          const double llo = std::log(s.lo), lhi = std::log(s.hi);
          // one draw per fine cell, shared by its two triangles
          for (Index e = 0; e < mesh.num_elems(); e += 2) {
            const double v = std::clamp(std::exp(llo + (lhi - llo) * unit(rng)), s.lo, s.hi);
            field[static_cast<std::size_t>(e)] = v;
            field[static_cast<std::size_t>(e + 1)] = v;
          }
        }
      },
      spec);
  return field;
}

const char* to_string(ProblemKind kind)
{
  switch (kind) {
    case ProblemKind::Diffusion: return "diffusion";
    case ProblemKind::ConvectionDiffusion: return "convection-diffusion";
    case ProblemKind::Helmholtz: return "helmholtz";
  }
  return "unknown";
}

double ProblemDef::a_min() const { return a.empty() ? 0.0 : *std::min_element(a.begin(), a.end()); }
double ProblemDef::a_max() const { return a.empty() ? 0.0 : *std::max_element(a.begin(), a.end()); }
double ProblemDef::v_max() const
{
  double m = 0.0;
  for (double v : V) m = std::max(m, std::abs(v));
  return m;
}

void validate(ProblemDef& p, const Mesh2D& mesh)
{
  const auto ne = static_cast<std::size_t>(mesh.num_elems());
  const auto nn = static_cast<std::size_t>(mesh.num_nodes());
  const auto nb = mesh.boundary_edges.size();
  if (p.a.size() != ne) throw Error(ErrorCode::InvalidInput, "diffusion field has wrong length");
  for (double v : p.a)
    if (!(v > 0)) throw Error(ErrorCode::NonpositiveCoefficient, "diffusion coefficient must be positive");
  if (p.b.empty()) p.b.assign(ne, {0.0, 0.0});
  if (p.V.empty()) p.V.assign(ne, 1.0);
  if (p.beta.empty()) p.beta.assign(nb, 1.0);
  if (p.f.empty()) p.f.assign(nn, 0.0);
  if (p.g.empty()) p.g.assign(nb, 0.0);
  if (p.b.size() != ne || p.V.size() != ne) throw Error(ErrorCode::InvalidInput, "per-element field has wrong length");
  if (p.beta.size() != nb || p.g.size() != nb) throw Error(ErrorCode::InvalidInput, "per-edge field has wrong length");
  if (p.f.size() != nn) throw Error(ErrorCode::InvalidInput, "load field has wrong length");
  if (p.k < 0) throw Error(ErrorCode::InvalidInput, "wavenumber must be non-negative");
  if (p.kind == ProblemKind::Helmholtz)
    for (double v : p.beta)
      if (!(v > 0)) throw Error(ErrorCode::NonpositiveCoefficient, "impedance coefficient must be positive");
}

IndexList all_elements(const Mesh2D& mesh)
{
  IndexList all(static_cast<std::size_t>(mesh.num_elems()));
  for (Index e = 0; e < mesh.num_elems(); ++e) all[static_cast<std::size_t>(e)] = e;
  return all;
}

namespace {

struct ElementGeometry {
  std::array<std::array<double, 2>, 3> grad;  // gradients of the barycentric coordinates
  double area;
};

ElementGeometry geometry(const Mesh2D& mesh, Index e)
{
  const auto& t = mesh.elems[static_cast<std::size_t>(e)];
  const Point& p0 = mesh.nodes[static_cast<std::size_t>(t[0])];
  const Point& p1 = mesh.nodes[static_cast<std::size_t>(t[1])];
  const Point& p2 = mesh.nodes[static_cast<std::size_t>(t[2])];
  const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  ElementGeometry g;
  g.area = 0.5 * det;
  const std::array<Point, 3> p{p0, p1, p2};
  for (int i = 0; i < 3; ++i) {
    const Point& pj = p[static_cast<std::size_t>((i + 1) % 3)];
    const Point& pk = p[static_cast<std::size_t>((i + 2) % 3)];
    g.grad[static_cast<std::size_t>(i)] = {(pj.y - pk.y) / det, (pk.x - pj.x) / det};
  }
  return g;
}

CSparse from_triplets(Index n, const std::vector<CTriplet>& trips)
{
  CSparse M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

void add_boundary_mass(const Mesh2D& mesh, const std::vector<double>& weight, const std::vector<char>& in_set,
                       Complex scale, std::vector<CTriplet>& trips)
{
  for (std::size_t ei = 0; ei < mesh.boundary_edges.size(); ++ei) {
    const auto& edge = mesh.boundary_edges[ei];
    if (!in_set.empty() && !in_set[static_cast<std::size_t>(edge.elem)]) continue;
    const Point& pa = mesh.nodes[static_cast<std::size_t>(edge.a)];
    const Point& pb = mesh.nodes[static_cast<std::size_t>(edge.b)];
    const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
    const Complex w = scale * weight[ei] * len / 6.0;
    const auto a = static_cast<int>(edge.a), b = static_cast<int>(edge.b);
    trips.emplace_back(a, a, 2.0 * w);
    trips.emplace_back(b, b, 2.0 * w);
    trips.emplace_back(a, b, w);
    trips.emplace_back(b, a, w);
  }
}

}  // namespace

CSparse assemble_boundary_mass(const Mesh2D& mesh, const std::vector<double>& weight, const IndexList& elem_set)
{
  std::vector<char> in_set;
  if (!elem_set.empty()) {
    in_set.assign(static_cast<std::size_t>(mesh.num_elems()), 0);
    for (Index e : elem_set) in_set[static_cast<std::size_t>(e)] = 1;
  }
  std::vector<CTriplet> trips;
  add_boundary_mass(mesh, weight, in_set, Complex(1.0, 0.0), trips);
  return from_triplets(mesh.num_nodes(), trips);
}

SparseForm assemble_form(const ProblemDef& problem, const Mesh2D& mesh, FormKind form, const IndexList& elem_set)
{
  if (elem_set.empty()) throw Error(ErrorCode::EmptyRegion, "cannot assemble a form over an empty element set");

  const bool stiffness = form != FormKind::Mass;
  const bool convection = form == FormKind::B && problem.kind == ProblemKind::ConvectionDiffusion;
  const bool helmholtz_b = form == FormKind::B && problem.kind == ProblemKind::Helmholtz;
  // weighted mass coefficient: +k^2 V^2 for BplusK, -k^2 V^2 for the Helmholtz B form
  double mass_sign = 0.0;
  if (form == FormKind::Mass) mass_sign = 1.0;
  if (form == FormKind::BplusK) mass_sign = 1.0;
  if (helmholtz_b) mass_sign = -1.0;

  std::vector<CTriplet> trips;
  trips.reserve(elem_set.size() * 9 * (convection ? 2 : 1) * (mass_sign != 0.0 ? 2 : 1));
  std::vector<char> in_set(static_cast<std::size_t>(mesh.num_elems()), 0);

  for (Index e : elem_set) {
    if (e < 0 || e >= mesh.num_elems()) throw Error(ErrorCode::InvalidInput, "element index out of range");
    in_set[static_cast<std::size_t>(e)] = 1;
    const auto& t = mesh.elems[static_cast<std::size_t>(e)];
    const auto g = geometry(mesh, e);
    const auto se = static_cast<std::size_t>(e);

    double mass_weight = 0.0;
    if (form == FormKind::Mass)
      mass_weight = 1.0;
    else if (mass_sign != 0.0)
      mass_weight = mass_sign * problem.k * problem.k * problem.V[se] * problem.V[se];

    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        const auto ur = static_cast<std::size_t>(r), uc = static_cast<std::size_t>(c);
        double v = 0.0;
        if (stiffness)
          v += problem.a[se] * g.area * (g.grad[ur][0] * g.grad[uc][0] + g.grad[ur][1] * g.grad[uc][1]);
        if (mass_weight != 0.0) v += mass_weight * g.area / 12.0 * (r == c ? 2.0 : 1.0);
        if (convection) {
          // (b . grad phi_c) is constant; the one-point rule integrates the linear test function exactly
          const auto& bb = problem.b[se];
          v += (bb[0] * g.grad[uc][0] + bb[1] * g.grad[uc][1]) * g.area / 3.0;
        }
        if (v != 0.0) trips.emplace_back(static_cast<int>(t[ur]), static_cast<int>(t[uc]), v);
      }
  }

  if (helmholtz_b) {
    const Complex scale = problem.k > 0 ? Complex(0.0, -problem.k) : Complex(1.0, 0.0);
    add_boundary_mass(mesh, problem.beta, in_set, scale, trips);
  }

  SparseForm out;
  out.matrix = from_triplets(mesh.num_nodes(), trips);
  if (convection || helmholtz_b)
    out.symmetry = Symmetry::General;
  else
    out.symmetry = Symmetry::Symmetric;
  return out;
}

CSparse assemble_form_factor(const ProblemDef& problem, const Mesh2D& mesh, FormKind form,
                             const IndexList& elem_set)
{
  if (form == FormKind::B) throw Error(ErrorCode::InvalidInput, "the B form has no Gram factor");
  if (elem_set.empty()) throw Error(ErrorCode::EmptyRegion, "cannot assemble a form over an empty element set");

  // stiffness a|T| grad grad^T: two rows; P1 mass |T|/12 (I + 1 1^T): four rows
  const bool stiffness = form != FormKind::Mass;
  const bool has_mass = form == FormKind::Mass || (form == FormKind::BplusK && problem.k != 0.0);
  std::vector<CTriplet> trips;
  int row = 0;
  for (Index e : elem_set) {
    if (e < 0 || e >= mesh.num_elems()) throw Error(ErrorCode::InvalidInput, "element index out of range");
    const auto& t = mesh.elems[static_cast<std::size_t>(e)];
    const auto g = geometry(mesh, e);
    const auto se = static_cast<std::size_t>(e);
    if (stiffness) {
      const double w = std::sqrt(problem.a[se] * g.area);
      for (int d = 0; d < 2; ++d, ++row)
        for (std::size_t q = 0; q < 3; ++q)
          if (g.grad[q][static_cast<std::size_t>(d)] != 0.0)
            trips.emplace_back(row, static_cast<int>(t[q]), w * g.grad[q][static_cast<std::size_t>(d)]);
    }
    if (has_mass) {
      const double c = form == FormKind::Mass ? 1.0 : problem.k * problem.k * problem.V[se] * problem.V[se];
      const double w = std::sqrt(c * g.area / 12.0);
      for (std::size_t q = 0; q < 3; ++q) trips.emplace_back(row + static_cast<int>(q), static_cast<int>(t[q]), w);
      for (std::size_t q = 0; q < 3; ++q) trips.emplace_back(row + 3, static_cast<int>(t[q]), w);
      row += 4;
    }
  }
  CSparse F(row, mesh.num_nodes());
  F.setFromTriplets(trips.begin(), trips.end());
  F.makeCompressed();
  return F;
}

SparseForm assemble_form(const ProblemDef& problem, const Mesh2D& mesh, FormKind form)
{
  return assemble_form(problem, mesh, form, all_elements(mesh));
}

CVec assemble_load(const ProblemDef& problem, const Mesh2D& mesh)
{
  const SparseForm mass = assemble_form(problem, mesh, FormKind::Mass);
  CVec f(mesh.num_nodes());
  for (Index i = 0; i < mesh.num_nodes(); ++i) f[i] = problem.f[static_cast<std::size_t>(i)];
  CVec F = mass.matrix * f;
  if (problem.kind == ProblemKind::Helmholtz) {
    for (std::size_t ei = 0; ei < mesh.boundary_edges.size(); ++ei) {
      const auto& edge = mesh.boundary_edges[ei];
      const Point& pa = mesh.nodes[static_cast<std::size_t>(edge.a)];
      const Point& pb = mesh.nodes[static_cast<std::size_t>(edge.b)];
      const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
      F[edge.a] += problem.g[ei] * len / 2.0;
      F[edge.b] += problem.g[ei] * len / 2.0;
    }
  }
  return F;
}

IndexList free_nodes(const ProblemDef& problem, const Mesh2D& mesh)
{
  IndexList free;
  for (Index i = 0; i < mesh.num_nodes(); ++i)
    if (!problem.dirichlet() || !mesh.on_boundary[static_cast<std::size_t>(i)]) free.push_back(i);
  return free;
}

CSparse extract(const CSparse& M, const IndexList& rows, const IndexList& cols)
{
  std::vector<Index> row_pos(static_cast<std::size_t>(M.rows()), -1);
  for (std::size_t r = 0; r < rows.size(); ++r) row_pos[static_cast<std::size_t>(rows[r])] = static_cast<Index>(r);
  std::vector<CTriplet> trips;
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (CSparse::InnerIterator it(M, static_cast<Eigen::Index>(cols[c])); it; ++it) {
      const Index r = row_pos[static_cast<std::size_t>(it.row())];
      if (r >= 0) trips.emplace_back(static_cast<int>(r), static_cast<int>(c), it.value());
    }
  CSparse S(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  S.setFromTriplets(trips.begin(), trips.end());
  S.makeCompressed();
  return S;
}

double form_norm(const CSparse& M, const CVec& u)
{
  const Complex q = u.dot(M * u);
  return std::sqrt(std::max(0.0, q.real()));
}

struct FineSolver::Impl {
  Eigen::SparseLU<CSparse> lu;
};

FineSolver::FineSolver(const ProblemDef& problem, const Mesh2D& mesh)
    : A_(assemble_form(problem, mesh, FormKind::B).matrix),
      free_(free_nodes(problem, mesh)),
      position_(static_cast<std::size_t>(mesh.num_nodes()), -1),
      impl_(std::make_unique<Impl>())
{
  for (std::size_t i = 0; i < free_.size(); ++i) position_[static_cast<std::size_t>(free_[i])] = static_cast<Index>(i);
  const CSparse Aff = extract(A_, free_, free_);
  impl_->lu.compute(Aff);
  if (impl_->lu.info() != Eigen::Success)
    throw Error(ErrorCode::FactorizationFailure, "fine system factorization failed: " + impl_->lu.lastErrorMessage());
}

FineSolver::~FineSolver() = default;
FineSolver::FineSolver(FineSolver&&) noexcept = default;
FineSolver& FineSolver::operator=(FineSolver&&) noexcept = default;

CMat FineSolver::solve(const CMat& rhs) const
{
  const auto nf = static_cast<Eigen::Index>(free_.size());
  CMat r(nf, rhs.cols());
  for (Eigen::Index i = 0; i < nf; ++i) r.row(i) = rhs.row(free_[static_cast<std::size_t>(i)]);
  const CMat x = impl_->lu.solve(r);
  CMat out = CMat::Zero(rhs.rows(), rhs.cols());
  for (Eigen::Index i = 0; i < nf; ++i) out.row(free_[static_cast<std::size_t>(i)]) = x.row(i);
  return out;
}

CVec FineSolver::solve(const CVec& rhs) const
{
  CMat r = rhs;
  return solve(r).col(0);
}

CVec solve_fine_reference(const ProblemDef& problem, const Mesh2D& mesh)
{
  const FineSolver solver(problem, mesh);
  const CVec F = assemble_load(problem, mesh);
  CVec rhs = CVec::Zero(F.size());
  for (Index i : solver.free()) rhs[i] = F[i];
  const CVec u = solver.solve(rhs);

  // residual on the free rows
  const CVec Au = solver.matrix() * u;
  double res = 0.0, nrm = 0.0;
  for (Index i : solver.free()) {
    res += std::norm(Au[i] - rhs[i]);
    nrm += std::norm(rhs[i]);
  }
  if (std::sqrt(res) > 1e-10 * std::max(std::sqrt(nrm), 1e-300) && nrm > 0)
    throw Error(ErrorCode::FactorizationFailure, "fine solve residual too large");
  return u;
}

}  // namespace msgfem
