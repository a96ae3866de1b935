#include "msgfem/localops.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace msgfem {

struct LocalFactor {
  Eigen::SparseLU<CSparse> lu;
  CSparse A12;
};

CVec LocalProblem::restrict_global(const CVec& u) const
{
  CVec v(size());
  for (Index l = 0; l < size(); ++l) v[l] = u[dofs[static_cast<std::size_t>(l)]];
  return v;
}

CVec LocalProblem::extend(const CVec& v, Index num_nodes) const
{
  CVec u = CVec::Zero(num_nodes);
  for (Index l = 0; l < size(); ++l) u[dofs[static_cast<std::size_t>(l)]] = v[l];
  return u;
}

double sparse_inf_norm(const CSparse& A)
{
  RVec rows = RVec::Zero(A.rows());
  for (Eigen::Index c = 0; c < A.outerSize(); ++c)
    for (CSparse::InnerIterator it(A, c); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

double hermitian_defect(const CMat& A)
{
  const double n = A.norm();
  return n > 0 ? (A - A.adjoint()).norm() / n : 0.0;
}

LocalProblem assemble_local(const ProblemDef& problem, const Mesh2D& mesh, const Subdomain& sub)
{
  LocalProblem lp;
  lp.id = sub.id;
  lp.kind = problem.kind;
  lp.k = problem.k;

  const bool dirichlet = problem.dirichlet();
  auto keep = [&](Index v) { return !dirichlet || !mesh.on_boundary[static_cast<std::size_t>(v)]; };
  for (Index v : sub.omega_star_interior_nodes)
    if (keep(v)) lp.dofs.push_back(v);
  lp.n1 = static_cast<Index>(lp.dofs.size());
  for (Index v : sub.omega_star_boundary_nodes)
    if (keep(v)) lp.dofs.push_back(v);
  lp.n2 = static_cast<Index>(lp.dofs.size()) - lp.n1;
  if (lp.n1 == 0) throw Error(ErrorCode::EmptyRegion, "oversampling domain has no interior dofs", sub.id);

  lp.local_of.assign(static_cast<std::size_t>(mesh.num_nodes()), -1);
  for (std::size_t l = 0; l < lp.dofs.size(); ++l) lp.local_of[static_cast<std::size_t>(lp.dofs[l])] = static_cast<Index>(l);

  lp.chi.resize(lp.size());
  for (Index l = 0; l < lp.size(); ++l) {
    lp.chi[l] = sub.chi[static_cast<std::size_t>(lp.dofs[static_cast<std::size_t>(l)])];
    if (lp.chi[l] != 0.0) lp.J.push_back(l);
  }

  const SparseForm B = assemble_form(problem, mesh, FormKind::B, sub.omega_star_elems);
  lp.B_star = extract(B.matrix, lp.dofs, lp.dofs);
  lp.b_symmetry = B.symmetry;
  lp.Bplus_star = extract(assemble_form(problem, mesh, FormKind::Bplus, sub.omega_star_elems).matrix, lp.dofs, lp.dofs);
  lp.b_is_bplus = CSparse(lp.B_star - lp.Bplus_star).norm() == 0.0;

  const FormKind energy = problem.kind == ProblemKind::Helmholtz ? FormKind::BplusK : FormKind::Bplus;
  const CSparse E = extract(assemble_form(problem, mesh, energy, sub.omega_elems).matrix, lp.dofs, lp.dofs);
  const Eigen::DiagonalMatrix<Complex, Eigen::Dynamic> D(lp.chi.cast<Complex>());
  lp.P_gram = D * E * D;
  lp.P_gram.prune(Complex(0.0, 0.0));

  auto local_cols = [&](const CSparse& F) {
    IndexList rows(static_cast<std::size_t>(F.rows()));
    for (Index r = 0; r < F.rows(); ++r) rows[static_cast<std::size_t>(r)] = r;
    return extract(F, rows, lp.dofs);
  };
  lp.P_factor = local_cols(assemble_form_factor(problem, mesh, energy, sub.omega_elems)) * D;
  lp.P_factor.prune(Complex(0.0, 0.0));

  const bool constants = !sub.touches_boundary &&
                         (problem.kind != ProblemKind::Helmholtz || problem.k == 0.0);
  lp.kernel = constants ? CMat::Ones(lp.size(), 1) : CMat(lp.size(), 0);

  auto factor = std::make_shared<LocalFactor>();
  IndexList i1(static_cast<std::size_t>(lp.n1)), i2(static_cast<std::size_t>(lp.n2));
  for (Index l = 0; l < lp.n1; ++l) i1[static_cast<std::size_t>(l)] = l;
  for (Index l = 0; l < lp.n2; ++l) i2[static_cast<std::size_t>(l)] = lp.n1 + l;
  factor->lu.compute(extract(lp.B_star, i1, i1));
  if (factor->lu.info() != Eigen::Success)
    throw Error(ErrorCode::LocalSolveFailure, "interior block factorization failed", sub.id);
  factor->A12 = extract(lp.B_star, i1, i2);
  lp.a11 = factor;
  return lp;
}

CVec solve_particular(const LocalProblem& local, const CVec& F_local)
{
  if (F_local.size() != local.size()) throw Error(ErrorCode::InvalidInput, "local load has wrong length", local.id);
  CVec psi = CVec::Zero(local.size());
  const CVec rhs = F_local.head(local.n1);
  if (rhs.squaredNorm() == 0.0) return psi;
  const CVec x = local.a11->lu.solve(rhs);
  psi.head(local.n1) = x;
  if (local.a11->lu.info() != Eigen::Success)
    throw Error(ErrorCode::LocalSolveFailure, "particular solve failed", local.id);
  const CSparse& A = local.B_star;
  const CVec r = CVec(A * psi).head(local.n1) - rhs;
  if (r.norm() > 1e-10 * rhs.norm())
    throw Error(ErrorCode::LocalSolveFailure, "particular solve residual too large", local.id);
  return psi;
}

CMat harmonic_extension(const LocalProblem& local, const CMat& boundary_values)
{
  if (boundary_values.rows() != local.n2)
    throw Error(ErrorCode::InvalidInput, "boundary values must live on the artificial boundary dofs", local.id);
  CMat out(local.size(), boundary_values.cols());
  out.bottomRows(local.n2) = boundary_values;
  if (boundary_values.cols() == 0) return out;
  const CMat rhs = -(local.a11->A12 * boundary_values);
  // solve into contiguous storage, a strided destination corrupts all but the first column
  const CMat x = local.a11->lu.solve(rhs);
  if (local.a11->lu.info() != Eigen::Success)
    throw Error(ErrorCode::LocalSolveFailure, "harmonic extension solve failed", local.id);
  out.topRows(local.n1) = x;
  return out;
}

CVec harmonic_extension(const LocalProblem& local, const CVec& boundary_values)
{
  const CMat bv = boundary_values;
  return harmonic_extension(local, bv).col(0);
}

double harmonic_residual(const LocalProblem& local, const CMat& v)
{
  const double a = sparse_inf_norm(local.B_star);
  const CMat r = (local.B_star * v).topRows(local.n1);
  double worst = 0.0;
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double vn = v.col(c).cwiseAbs().maxCoeff();
    if (vn == 0.0) continue;
    worst = std::max(worst, r.col(c).cwiseAbs().maxCoeff() / (a * vn));
  }
  return worst;
}

}  // namespace msgfem
