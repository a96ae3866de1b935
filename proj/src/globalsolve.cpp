#include "msgfem/globalsolve.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <iostream>

namespace msgfem {

GlobalSpace build_global_space(const Mesh2D& mesh, const Cover& cover, const std::vector<LocalProblem>& locals,
                               const std::vector<LocalBasis>& bases, const std::vector<CVec>& particulars,
                               const std::vector<int>& dims)
{
  const auto M = cover.subdomains.size();
  if (locals.size() != M || bases.size() != M || particulars.size() != M || dims.size() != M)
    throw Error(ErrorCode::InvalidInput, "per-subdomain inputs do not match the cover size");

  GlobalSpace space;
  space.dims = dims;
  int total = 0;
  for (std::size_t i = 0; i < M; ++i) {
    const int l = bases[i].kernel_count();
    const int id = static_cast<int>(i);
    if (dims[i] < l)
      throw Error(ErrorCode::InvalidInput, "dimension smaller than the kernel size", id);
    if (dims[i] - l > bases[i].count())
      throw Error(ErrorCode::InsufficientSpectrum,
                  "dimension " + std::to_string(dims[i]) + " needs more than the " +
                      std::to_string(bases[i].count()) + " computed eigenvectors",
                  id);
    space.kernel_counts.push_back(l);
    total += dims[i];
  }

  const Index nn = mesh.num_nodes();
  space.basis = CMat::Zero(nn, total);
  space.particular = CVec::Zero(nn);
  int col = 0;
  for (std::size_t i = 0; i < M; ++i) {
    const LocalProblem& lp = locals[i];
    const auto& chi = cover.subdomains[i].chi;
    auto glue = [&](const CVec& v, CVec& out, bool accumulate) {
      for (Index d = 0; d < lp.size(); ++d) {
        const Index g = lp.dofs[static_cast<std::size_t>(d)];
        const Complex val = chi[static_cast<std::size_t>(g)] * v[d];
        out[g] = accumulate ? out[g] + val : val;
      }
    };
    for (int j = 0; j < dims[i]; ++j) {
      const int l = space.kernel_counts[i];
      CVec v = j < l ? CVec(bases[i].kernel.col(j)) : CVec(bases[i].vectors.col(j - l));
      CVec g = CVec::Zero(nn);
      glue(v, g, false);
      space.basis.col(col++) = g;
      space.owner.push_back(static_cast<int>(i));
    }
    glue(particulars[i], space.particular, true);
  }
  return space;
}

CSparse energy_matrix(const ProblemDef& problem, const Mesh2D& mesh)
{
  const FormKind f = problem.kind == ProblemKind::Helmholtz ? FormKind::BplusK : FormKind::Bplus;
  return assemble_form(problem, mesh, f).matrix;
}

GlobalSolution galerkin_solve(const ProblemDef& problem, const Mesh2D& mesh, const GlobalSpace& space, const CVec* u_h)
{
  const CSparse A = assemble_form(problem, mesh, FormKind::B).matrix;
  const CSparse E = energy_matrix(problem, mesh);
  CVec F = assemble_load(problem, mesh);
  if (problem.dirichlet())
    for (Index v : mesh.boundary_nodes) F[v] = 0.0;

  GlobalSolution sol;
  const int n = space.total_dim();
  std::vector<int> keep;
  std::vector<double> scale(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    scale[static_cast<std::size_t>(j)] = form_norm(E, space.basis.col(j));
    if (scale[static_cast<std::size_t>(j)] > 0)
      keep.push_back(j);
    else
      sol.pruned.push_back(j);
  }

  CMat V(space.basis.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    V.col(static_cast<Eigen::Index>(c)) = space.basis.col(keep[c]) / scale[static_cast<std::size_t>(keep[c])];

  const CVec rhs_full = F - A * space.particular;
  sol.coeffs = CVec::Zero(n);
  sol.u_G = space.particular;
  if (V.cols() > 0) {
    const CMat AV = A * V;
    CMat K = V.adjoint() * AV;
    CVec rhs = V.adjoint() * rhs_full;

    Eigen::ColPivHouseholderQR<CMat> qr(K);
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    if (rank == 0) throw Error(ErrorCode::CoarseSingularity, "coarse matrix vanishes");
    if (rank < K.cols()) {
      std::vector<Eigen::Index> independent;
      for (Eigen::Index r = 0; r < rank; ++r) independent.push_back(qr.colsPermutation().indices()[r]);
      std::sort(independent.begin(), independent.end());
      std::vector<char> used(static_cast<std::size_t>(K.cols()), 0);
      for (auto c : independent) used[static_cast<std::size_t>(c)] = 1;
      std::string list;
      for (Eigen::Index c = 0; c < K.cols(); ++c)
        if (!used[static_cast<std::size_t>(c)]) {
          sol.pruned.push_back(keep[static_cast<std::size_t>(c)]);
          list += " " + std::to_string(keep[static_cast<std::size_t>(c)]);
        }
      std::cerr << "warning: pruned dependent coarse columns:" << list << "\n";
      std::vector<int> kept2;
      CMat V2(V.rows(), rank);
      for (Eigen::Index r = 0; r < rank; ++r) {
        V2.col(r) = V.col(independent[static_cast<std::size_t>(r)]);
        kept2.push_back(keep[static_cast<std::size_t>(independent[static_cast<std::size_t>(r)])]);
      }
      V = V2;
      keep = kept2;
      K = V.adjoint() * (A * V);
      rhs = V.adjoint() * rhs_full;
      qr.compute(K);
    }
    const CVec c = qr.solve(rhs);
    if (!c.allFinite()) throw Error(ErrorCode::CoarseSingularity, "coarse solve produced non-finite values");
    for (std::size_t j = 0; j < keep.size(); ++j)
      sol.coeffs[keep[j]] = c[static_cast<Eigen::Index>(j)] / scale[static_cast<std::size_t>(keep[j])];
    sol.u_G += V * c;
    std::sort(sol.pruned.begin(), sol.pruned.end());
  }

  if (u_h) {
    const CSparse Mass = assemble_form(problem, mesh, FormKind::Mass).matrix;
    const CVec e = *u_h - sol.u_G;
    const double nu = form_norm(E, *u_h), nl = form_norm(Mass, *u_h);
    const double ee = form_norm(E, e), el = form_norm(Mass, e);
    sol.err_energy_rel = nu > 0 ? ee / nu : ee;
    sol.err_l2_rel = nl > 0 ? el / nl : el;
    const CVec Ae = A * e;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      const double r = std::abs(V.col(j).dot(Ae));
      worst = std::max(worst, nu > 0 ? r / nu : r);  // columns have unit energy
    }
    sol.galerkin_residual = worst;
  }
  return sol;
}

double error_bound(const Cover& cover, const std::vector<LocalBasis>& bases, const std::vector<int>& dims)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < bases.size(); ++i)
    worst = std::max(worst, std::sqrt(std::max(0.0, bases[i].lambda_after(dims[i] - bases[i].kernel_count()))));
  return std::sqrt(static_cast<double>(cover.zeta) * cover.zeta_star) * worst;
}

std::vector<int> select_dims(const std::vector<LocalBasis>& bases, const Cover& cover, double tau)
{
  if (!(tau > 0)) throw Error(ErrorCode::InvalidInput, "target tolerance must be positive");
  const double threshold = tau * tau / (static_cast<double>(cover.zeta) * cover.zeta_star);
  std::vector<int> dims;
  for (const auto& b : bases) {
    int m = 1;
    const int resolved = static_cast<int>(b.lambdas.size());
    while (m <= resolved && b.lambda_after(m) > threshold) ++m;
    if (b.lambda_after(m) > threshold)
      throw Error(ErrorCode::InsufficientSpectrum,
                  "threshold " + std::to_string(threshold) + " lies below the resolved spectrum", b.subdomain);
    if (m > b.count())
      throw Error(ErrorCode::InsufficientSpectrum,
                  "threshold needs " + std::to_string(m) + " eigenvectors, only " + std::to_string(b.count()) +
                      " computed",
                  b.subdomain);
    dims.push_back(b.kernel_count() + m);
  }
  return dims;
}

}  // namespace msgfem
