#include "helpers.hpp"

using namespace msgfem;
using namespace testing;

TEST_SUITE("mesh") {

TEST_CASE("numbering and counts")
{
  const Mesh2D m = build_unit_square_mesh(4);
  CHECK(m.num_nodes() == 25);
  CHECK(m.num_elems() == 32);
  CHECK(m.boundary_nodes.size() == 16);
  CHECK(m.boundary_edges.size() == 16);
  CHECK(m.node_id(3, 2) == 13);
  CHECK(m.nodes[13].x == doctest::Approx(0.75));
  CHECK(m.nodes[13].y == doctest::Approx(0.5));
  // cell (1, 2): lower-left to upper-right diagonal
  const auto& t1 = m.elems[2 * (2 * 4 + 1)];
  const auto& t2 = m.elems[2 * (2 * 4 + 1) + 1];
  CHECK(t1 == std::array<Index, 3>{m.node_id(1, 2), m.node_id(2, 2), m.node_id(2, 3)});
  CHECK(t2 == std::array<Index, 3>{m.node_id(1, 2), m.node_id(2, 3), m.node_id(1, 3)});
  double area = 0;
  for (double a : m.elem_areas) area += a;
  CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("invalid resolution")
{
  CHECK_THROWS_AS(build_unit_square_mesh(1), Error);
  try {
    build_unit_square_mesh(0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidResolution);
  }
}

TEST_CASE("stiffness is the five point stencil for unit coefficient")
{
  const Mesh2D m = build_unit_square_mesh(6);
  const ProblemDef p = diffusion(m);
  const CMat K = CMat(assemble_form(p, m, FormKind::Bplus).matrix);
  const Index c = m.node_id(3, 3);
  CHECK(std::abs(K(c, c) - 4.0) < 1e-13);
  CHECK(std::abs(K(c, m.node_id(2, 3)) + 1.0) < 1e-13);
  CHECK(std::abs(K(c, m.node_id(3, 4)) + 1.0) < 1e-13);
  CHECK(std::abs(K(c, m.node_id(4, 4))) < 1e-13);
  CHECK((K * CVec::Ones(m.num_nodes())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((K - K.adjoint()).norm() < 1e-13);
}

TEST_CASE("mass integrates constants and convection annihilates them")
{
  const Mesh2D m = build_unit_square_mesh(5);
  ProblemDef p = diffusion(m);
  const CVec one = CVec::Ones(m.num_nodes());
  const CSparse M = assemble_form(p, m, FormKind::Mass).matrix;
  CHECK(std::abs(one.dot(M * one) - 1.0) < 1e-13);
  p.kind = ProblemKind::ConvectionDiffusion;
  p.b.assign(static_cast<std::size_t>(m.num_elems()), {1.0, -2.0});
  const SparseForm B = assemble_form(p, m, FormKind::B);
  CHECK(B.symmetry == Symmetry::General);
  CHECK(CVec(B.matrix * one).cwiseAbs().maxCoeff() < 1e-12);
  // (b . grad x) integrated against 1 gives b_x
  CVec x(m.num_nodes());
  for (Index i = 0; i < m.num_nodes(); ++i) x[i] = m.nodes[static_cast<std::size_t>(i)].x;
  const CSparse K = assemble_form(p, m, FormKind::Bplus).matrix;
  CHECK(std::abs(one.dot(CVec((B.matrix - K) * x)) - 1.0) < 1e-12);
}

TEST_CASE("coefficient fields")
{
  const Mesh2D m = build_unit_square_mesh(8);
  const auto cb = make_coefficient(coeff::Checkerboard{2, 1.0, 7.0}, m, 0);
  CHECK(cb[0] == 1.0);
  CHECK(cb[static_cast<std::size_t>(2 * (0 * 8 + 5))] == 7.0);
  CHECK(cb[static_cast<std::size_t>(2 * (5 * 8 + 5))] == 1.0);
  const auto r1 = make_coefficient(coeff::RandomContrast{1.0, 1e4}, m, 9);
  const auto r2 = make_coefficient(coeff::RandomContrast{1.0, 1e4}, m, 9);
  CHECK(r1 == r2);
  for (std::size_t e = 0; e < r1.size(); ++e) {
    CHECK(r1[e] >= 1.0);
    CHECK(r1[e] <= 1e4);
  }
  CHECK(r1[0] == r1[1]);
  CHECK_THROWS_AS(make_coefficient(coeff::Constant{-1.0}, m, 0), Error);
}

TEST_CASE("fine diffusion solution matches the reference")
{
  const Mesh2D m = build_unit_square_mesh(8);
  const ProblemDef p = diffusion(m, coeff::Checkerboard{2, 1.0, 10.0});
  const CVec u = solve_fine_reference(p, m);
  const CSparse K = assemble_form(p, m, FormKind::Bplus).matrix;
  CHECK(rel(u[m.node_id(4, 4)].real(), oracle::diffusion_center) < 1e-12);
  CHECK(rel(u.dot(K * u).real(), oracle::diffusion_energy) < 1e-12);
  CHECK(rel(u.sum().real(), oracle::diffusion_sum) < 1e-12);
  CHECK(u[0] == Complex(0.0, 0.0));
}

TEST_CASE("fine convection-diffusion solution matches the reference")
{
  const Mesh2D m = build_unit_square_mesh(8);
  ProblemDef p = diffusion(m);
  p.kind = ProblemKind::ConvectionDiffusion;
  p.b.assign(static_cast<std::size_t>(m.num_elems()), {1.0, 0.5});
  validate(p, m);
  const CVec u = solve_fine_reference(p, m);
  CHECK(rel(u[m.node_id(4, 4)].real(), oracle::convection_center) < 1e-12);
  CHECK(rel(u[m.node_id(2, 2)].real(), oracle::convection_q1) < 1e-12);
}

TEST_CASE("fine Helmholtz solution matches the reference")
{
  const Mesh2D m = build_unit_square_mesh(8);
  const ProblemDef p = helmholtz(m, 3.0, 0.5);
  const CVec u = solve_fine_reference(p, m);
  CHECK(std::abs(u[m.node_id(4, 4)] - oracle::helmholtz_center) < 1e-12 * std::abs(oracle::helmholtz_center));
  CHECK(std::abs(u[0] - oracle::helmholtz_corner) < 1e-12 * std::abs(oracle::helmholtz_corner));
  const SparseForm B = assemble_form(p, m, FormKind::B);
  CHECK(B.symmetry == Symmetry::General);
  const CMat A(B.matrix);
  CHECK((A - A.transpose()).norm() < 1e-13);
  CHECK((A - A.adjoint()).norm() > 1e-3);
}

TEST_CASE("Helmholtz at zero wavenumber carries a Robin term")
{
  const Mesh2D m = build_unit_square_mesh(8);
  const ProblemDef p = helmholtz(m, 0.0);
  const CVec u = solve_fine_reference(p, m);
  CHECK(rel(u[m.node_id(4, 4)].real(), oracle::robin_center) < 1e-12);
  CHECK(rel(u[0].real(), oracle::robin_corner) < 1e-12);
  CHECK(u.imag().cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("energy with wavenumber adds the weighted mass")
{
  const Mesh2D m = build_unit_square_mesh(4);
  const ProblemDef p = helmholtz(m, 2.0);
  const CSparse K = assemble_form(p, m, FormKind::Bplus).matrix;
  const CSparse Kk = assemble_form(p, m, FormKind::BplusK).matrix;
  const CSparse M = assemble_form(p, m, FormKind::Mass).matrix;
  CHECK(CSparse(Kk - K - Complex(4.0) * M).norm() < 1e-13);
}

TEST_CASE("form factors reproduce the assembled forms")
{
  const Mesh2D m = build_unit_square_mesh(6);
  IndexList part;
  for (Index e = 0; e < m.num_elems(); e += 3) part.push_back(e);
  const ProblemDef d = diffusion(m, coeff::Checkerboard{3, 1.0, 40.0});
  const ProblemDef h = helmholtz(m, 5.0);
  for (const auto& [p, form] : {std::pair{d, FormKind::Bplus}, std::pair{h, FormKind::BplusK}, std::pair{h, FormKind::Mass}}) {
    const CSparse F = assemble_form_factor(p, m, form, part);
    const CSparse G = assemble_form(p, m, form, part).matrix;
    const CSparse FF = F.adjoint() * F;
    CHECK(CSparse(FF - G).norm() < 1e-12 * G.norm());
  }
  CHECK_THROWS_AS(assemble_form_factor(h, m, FormKind::B, part), Error);
}

}  // TEST_SUITE
