#include "msgfem/greenrank.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseLU>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace msgfem {

BlockPair make_block_pair(const ProblemDef& problem, const Mesh2D& mesh, const Box& b1, const Box& b2)
{
  BlockPair pair;
  for (Index v : free_nodes(problem, mesh)) {
    const Point& p = mesh.nodes[static_cast<std::size_t>(v)];
    if (b1.contains(p)) pair.D1.push_back(v);
    if (b2.contains(p)) pair.D2.push_back(v);
  }
  if (pair.D1.empty() || pair.D2.empty()) throw Error(ErrorCode::EmptyRegion, "block box holds no free nodes");
  if (pair.D1 == pair.D2) throw Error(ErrorCode::PreconditionViolation, "block index sets must differ");

  double dist = INFINITY, diam = 0.0;
  for (Index a : pair.D1)
    for (Index b : pair.D2) {
      const Point& p = mesh.nodes[static_cast<std::size_t>(a)];
      const Point& q = mesh.nodes[static_cast<std::size_t>(b)];
      dist = std::min(dist, std::hypot(p.x - q.x, p.y - q.y));
    }
  for (Index a : pair.D2)
    for (Index b : pair.D2) {
      const Point& p = mesh.nodes[static_cast<std::size_t>(a)];
      const Point& q = mesh.nodes[static_cast<std::size_t>(b)];
      diam = std::max(diam, std::hypot(p.x - q.x, p.y - q.y));
    }
  if (!(dist > 0)) throw Error(ErrorCode::PreconditionViolation, "block boxes share nodes");
  pair.rho = diam > 0 ? dist / diam : INFINITY;
  return pair;
}

CMat green_block(const FineSolver& solver, const BlockPair& pair)
{
  const Index nn = solver.matrix().rows();
  CMat rhs = CMat::Zero(nn, static_cast<Eigen::Index>(pair.D2.size()));
  for (std::size_t q = 0; q < pair.D2.size(); ++q) {
    if (solver.free_position(pair.D2[q]) < 0) throw Error(ErrorCode::PreconditionViolation, "column node is eliminated");
    rhs(pair.D2[q], static_cast<Eigen::Index>(q)) = 1.0;
  }
  const CMat X = solver.solve(rhs);
  CMat block(static_cast<Eigen::Index>(pair.D1.size()), X.cols());
  for (std::size_t p = 0; p < pair.D1.size(); ++p) block.row(static_cast<Eigen::Index>(p)) = X.row(pair.D1[p]);
  return block;
}

CMat green_block(const ProblemDef& problem, const Mesh2D& mesh, const BlockPair& pair)
{
  const FineSolver solver(problem, mesh);
  return green_block(solver, pair);
}

namespace {
using Wide = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>, boost::multiprecision::et_off>;
using WMat = Eigen::Matrix<Wide, Eigen::Dynamic, Eigen::Dynamic>;
}  // namespace

std::vector<double> green_block_sigmas_extended(const ProblemDef& problem, const Mesh2D& mesh, const BlockPair& pair)
{
  const CSparse A = assemble_form(problem, mesh, FormKind::B).matrix;
  const IndexList fr = free_nodes(problem, mesh);
  std::vector<Index> pos(static_cast<std::size_t>(mesh.num_nodes()), -1);
  for (std::size_t i = 0; i < fr.size(); ++i) pos[static_cast<std::size_t>(fr[i])] = static_cast<Index>(i);
  const CSparse Aff = extract(A, fr, fr);

  std::vector<Eigen::Triplet<Wide>> trip;
  for (Eigen::Index c = 0; c < Aff.outerSize(); ++c)
    for (CSparse::InnerIterator it(Aff, c); it; ++it) {
      if (it.value().imag() != 0.0) throw Error(ErrorCode::InvalidInput, "extended block needs a real matrix");
      trip.emplace_back(static_cast<Eigen::Index>(it.row()), static_cast<Eigen::Index>(it.col()), Wide(it.value().real()));
    }
  Eigen::SparseMatrix<Wide> Aw(Aff.rows(), Aff.cols());
  Aw.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<Wide>> lu(Aw);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::FactorizationFailure, "extended fine factorization failed");

  WMat rhs = WMat::Zero(Aff.rows(), static_cast<Eigen::Index>(pair.D2.size()));
  for (std::size_t q = 0; q < pair.D2.size(); ++q) {
    const Index at = pos[static_cast<std::size_t>(pair.D2[q])];
    if (at < 0) throw Error(ErrorCode::PreconditionViolation, "column node is eliminated");
    rhs(at, static_cast<Eigen::Index>(q)) = 1;
  }
  const WMat X = lu.solve(rhs);
  WMat G(static_cast<Eigen::Index>(pair.D1.size()), X.cols());
  for (std::size_t p = 0; p < pair.D1.size(); ++p) {
    const Index at = pos[static_cast<std::size_t>(pair.D1[p])];
    if (at < 0) throw Error(ErrorCode::PreconditionViolation, "row node is eliminated");
    G.row(static_cast<Eigen::Index>(p)) = X.row(at);
  }
  Eigen::JacobiSVD<WMat> svd(G);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) out.push_back(static_cast<double>(svd.singularValues()[i]));
  return out;
}

double extended_noise_level(const BlockPair& pair)
{
  return static_cast<double>(std::max(pair.D1.size(), pair.D2.size())) * static_cast<double>(std::numeric_limits<Wide>::epsilon());
}

GreenBlockReport separability_report(const CMat& block, const std::vector<double>& tolerances, int fit_lo, int fit_hi)
{
  if (block.size() == 0) throw Error(ErrorCode::InvalidInput, "empty block");
  Eigen::BDCSVD<CMat> svd(block);
  const auto& s = svd.singularValues();
  const double noise = static_cast<double>(std::max(block.rows(), block.cols())) * std::numeric_limits<double>::epsilon();
  return separability_report(std::vector<double>(s.data(), s.data() + s.size()), noise, tolerances, fit_lo, fit_hi);
}

GreenBlockReport separability_report(std::vector<double> sigmas, double noise_rel, const std::vector<double>& tolerances,
                                     int fit_lo, int fit_hi)
{
  if (sigmas.empty()) throw Error(ErrorCode::InvalidInput, "empty block");
  for (std::size_t t = 0; t < tolerances.size(); ++t) {
    if (!(tolerances[t] > 0 && tolerances[t] <= 1)) throw Error(ErrorCode::InvalidInput, "tolerance outside (0, 1]");
    if (t > 0 && tolerances[t] > tolerances[t - 1]) throw Error(ErrorCode::InvalidInput, "tolerances must descend");
  }
  GreenBlockReport rep;
  rep.fit_lo = fit_lo;
  rep.fit_hi = fit_hi;
  rep.tolerances = tolerances;
  rep.sigmas = std::move(sigmas);
  const double s1 = rep.sigmas.empty() ? 0.0 : rep.sigmas.front();
  for (double eps : tolerances) {
    int r = 0;
    if (s1 > 0)
      for (double v : rep.sigmas)
        if (v > eps * s1) ++r;
    rep.ranks.push_back(r);
  }
  // values under the numerical rank tolerance are rounding noise and end the window
  const double noise = noise_rel * s1;
  std::vector<double> x, y;
  int last = fit_lo - 1;
  for (int n = fit_lo; n <= fit_hi && n <= static_cast<int>(rep.sigmas.size()); ++n) {
    const double v = rep.sigmas[static_cast<std::size_t>(n - 1)];
    if (!(v > noise)) break;
    x.push_back(std::sqrt(static_cast<double>(n)));
    y.push_back(std::log(v));
    last = n;
  }
  rep.fit_hi = last;
  if (x.size() >= 2) rep.fit = linear_fit(x, y);
  return rep;
}

}  // namespace msgfem
