#include "helpers.hpp"

#include <random>

using namespace msgfem;
using namespace testing;

TEST_SUITE("localops") {

TEST_CASE("local dofs drop Dirichlet nodes and order I1 before I2")
{
  const Mesh2D m = build_unit_square_mesh(16);
  const ProblemDef p = diffusion(m);
  const Cover c = build_cover(m, 4, 4, 1, 1);
  const Subdomain& s = c.subdomains[0];
  const LocalProblem lp = assemble_local(p, m, s);
  // omega* = cells [0,9]^2, artificial sides x = 9 and y = 9
  CHECK(lp.n2 == 2 * 8 + 1);
  CHECK(lp.n1 == 8 * 8);
  for (Index l = 0; l < lp.size(); ++l) {
    const Index v = lp.dofs[static_cast<std::size_t>(l)];
    CHECK_FALSE(m.on_boundary[static_cast<std::size_t>(v)]);
    CHECK(lp.local_of[static_cast<std::size_t>(v)] == l);
  }
  for (Index j : lp.J) CHECK(j < lp.n1);
  CHECK(lp.b_is_bplus);
  CHECK(lp.kernel_count() == 0);
}

TEST_CASE("harmonic extension satisfies the interior equations")
{
  const Mesh2D m = build_unit_square_mesh(20);
  const ProblemDef p = diffusion(m, coeff::Checkerboard{4, 1.0, 1000.0});
  const Cover c = build_cover(m, 5, 5, 1, 1);
  const LocalProblem lp = assemble_local(p, m, c.subdomains[static_cast<std::size_t>(c.id_of(2, 2))]);
  CHECK(lp.kernel_count() == 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  CMat bv(lp.n2, 5);
  for (Index i = 0; i < bv.size(); ++i) bv.data()[i] = nd(rng);
  const CMat H = harmonic_extension(lp, bv);
  CHECK(harmonic_residual(lp, H) < 1e-12);
  CHECK((H.bottomRows(lp.n2) - bv).norm() == 0.0);
  // constants are harmonic and the kernel of B+
  CHECK(harmonic_residual(lp, lp.kernel) < 1e-12);
  CHECK(CVec(lp.Bplus_star * lp.kernel.col(0)).cwiseAbs().maxCoeff() < 1e-9);
  const CVec ones = CVec::Ones(lp.n2);
  CHECK((harmonic_extension(lp, ones) - CVec::Ones(lp.size())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("particular solution and the fine solution differ by a harmonic function")
{
  const Mesh2D m = build_unit_square_mesh(16);
  const ProblemDef p = diffusion(m, coeff::Checkerboard{4, 1.0, 100.0});
  const Cover c = build_cover(m, 4, 4, 1, 1);
  const CVec u = solve_fine_reference(p, m);
  const CVec F = assemble_load(p, m);
  for (const auto& s : c.subdomains) {
    const LocalProblem lp = assemble_local(p, m, s);
    const CVec psi = solve_particular(lp, lp.restrict_global(F));
    CHECK(psi.tail(lp.n2).norm() == 0.0);
    const CMat r = lp.restrict_global(u) - psi;
    CHECK(harmonic_residual(lp, r) < 1e-10);
  }
}

TEST_CASE("positive gram form and Hermitian defect")
{
  const Mesh2D m = build_unit_square_mesh(16);
  const ProblemDef p = helmholtz(m, 4.0);
  const Cover c = build_cover(m, 4, 4, 1, 1);
  const LocalProblem lp = assemble_local(p, m, c.subdomains[5]);
  CHECK_FALSE(lp.b_is_bplus);
  CHECK(lp.kernel_count() == 0);
  const CMat P(lp.P_gram);
  CHECK(hermitian_defect(P) < 1e-14);
  CHECK(Eigen::SelfAdjointEigenSolver<CMat>(P).eigenvalues().minCoeff() > -1e-12);
  CHECK(hermitian_defect(CMat(lp.B_star)) > 1e-3);
  CHECK_THROWS_AS(solve_particular(lp, CVec::Zero(3)), Error);
}

}  // TEST_SUITE
