#include "msgfem/specsolve.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <type_traits>

namespace msgfem {

const char* to_string(Route route)
{
  switch (route) {
    case Route::Mixed: return "mixed";
    case Route::Reduced: return "reduced";
    case Route::Oracle: return "oracle";
  }
  return "unknown";
}

Route parse_route(const std::string& name)
{
  if (name == "mixed") return Route::Mixed;
  if (name == "reduced") return Route::Reduced;
  if (name == "oracle") return Route::Oracle;
  throw Error(ErrorCode::Config, "unknown solver route '" + name + "'");
}

double LocalBasis::lambda_after(int m) const
{
  if (m < 0) throw Error(ErrorCode::IndexOutOfRange, "negative eigenvalue index", subdomain);
  return m < static_cast<int>(lambdas.size()) ? lambdas[static_cast<std::size_t>(m)] : floor;
}

namespace {

CMat dense_block(const CSparse& A, const IndexList& rows, const IndexList& cols)
{
  return CMat(extract(A, rows, cols));
}

// Largest-entry phase fixed to real positive, then B+-normalized.
void normalize_columns(const CSparse& Bplus, CMat& V)
{
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    Eigen::Index imax = 0;
    V.col(c).cwiseAbs().maxCoeff(&imax);
    const Complex z = V(imax, c);
    if (std::abs(z) > 0) V.col(c) *= std::conj(z) / std::abs(z);
    const double nrm = form_norm(Bplus, V.col(c));
    if (nrm > 0) V.col(c) /= nrm;
  }
}

// Two-pass B+-Gram-Schmidt in order, leading spans are unchanged.
void orthonormalize(const CSparse& Bplus, CMat& V)
{
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index a = 0; a < V.cols(); ++a) {
      if (a > 0) {
        const CVec proj = V.leftCols(a).adjoint() * (Bplus * V.col(a));
        V.col(a) -= V.leftCols(a) * proj;
      }
      const double nrm = form_norm(Bplus, V.col(a));
      if (nrm > 0) V.col(a) /= nrm;
    }
}

LocalBasis finalize(const LocalProblem& local, Route route, const std::vector<double>& lam_desc,
                    const std::function<CMat(int)>& top_vectors, const EigenOptions& opt, double imag_residue)
{
  LocalBasis basis;
  basis.subdomain = local.id;
  basis.route = route;
  basis.kernel = local.kernel;
  basis.imag_residue = imag_residue;

  const Index harmonic_dim = local.n2 - local.kernel_count();
  if (opt.n_ev < 0) throw Error(ErrorCode::InvalidInput, "negative eigenpair count", local.id);
  if (harmonic_dim <= 0 || opt.n_ev > harmonic_dim)
    throw Error(ErrorCode::InsufficientSpectrum,
                "requested " + std::to_string(opt.n_ev) + " eigenpairs but the harmonic space has dimension " +
                    std::to_string(std::max<Index>(harmonic_dim, 0)),
                local.id);

  const double lmax = lam_desc.empty() ? 0.0 : lam_desc.front();
  if (!(lmax > 0.0)) {
    // P vanishes on the harmonic space
    const Index m = opt.n_ev > 0 ? opt.n_ev : harmonic_dim;
    basis.lambdas.assign(static_cast<std::size_t>(m), 0.0);
    basis.vectors = CMat(local.size(), 0);
    return basis;
  }
  // the oracle resolves sqrt(lambda) to working precision, the pencil routes lambda itself
  const double resolution = route == Route::Oracle ? opt.filter * opt.filter : opt.filter;
  basis.floor = resolution * lmax;
  for (double v : lam_desc) {
    if (v <= basis.floor) break;
    basis.lambdas.push_back(v);
  }
  if (basis.lambdas.size() > static_cast<std::size_t>(harmonic_dim)) basis.lambdas.resize(static_cast<std::size_t>(harmonic_dim));
  // eigenpairs below the floor are still members of the harmonic space, only their ordering is noise
  const int available = static_cast<int>(std::min<Index>(static_cast<Index>(lam_desc.size()), harmonic_dim));
  if (opt.n_ev > available)
    throw Error(ErrorCode::InsufficientSpectrum,
                "only " + std::to_string(available) + " finite eigenpairs, " + std::to_string(opt.n_ev) + " requested",
                local.id);
  const int keep = opt.n_ev > 0 ? opt.n_ev : static_cast<int>(basis.lambdas.size());
  basis.vectors = top_vectors(keep);
  normalize_columns(local.Bplus_star, basis.vectors);
  orthonormalize(local.Bplus_star, basis.vectors);
  return basis;
}

// P_JJ = R^H R from the Hermitian eigendecomposition, valid for semidefinite P.
CMat gram_factor(const CMat& P)
{
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (P + P.adjoint()));
  RVec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return s.asDiagonal() * es.eigenvectors().adjoint();
}

void check_block_structure(const LocalProblem& local)
{
  for (Index j : local.J)
    if (j >= local.n1)
      throw Error(ErrorCode::PreconditionViolation, "partition of unity reaches the artificial boundary", local.id);
}

}  // namespace

LocalBasis solve_mixed_eigen(const LocalProblem& local, const EigenOptions& opt)
{
  check_block_structure(local);
  const Index N = local.size(), n1 = local.n1, l = local.kernel_count();
  const Index total = N + n1 + l;
  const CMat M = local.P_gram * local.kernel;

  std::vector<CTriplet> trips;
  for (Eigen::Index c = 0; c < local.Bplus_star.outerSize(); ++c)
    for (CSparse::InnerIterator it(local.Bplus_star, c); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (Eigen::Index c = 0; c < local.B_star.outerSize(); ++c)
    for (CSparse::InnerIterator it(local.B_star, c); it; ++it) {
      if (it.row() >= n1) continue;
      trips.emplace_back(static_cast<int>(N + it.row()), static_cast<int>(it.col()), it.value());
      trips.emplace_back(static_cast<int>(it.col()), static_cast<int>(N + it.row()), std::conj(it.value()));
    }
  for (Index q = 0; q < l; ++q)
    for (Index i = 0; i < N; ++i)
      if (M(i, q) != Complex(0.0, 0.0)) {
        trips.emplace_back(static_cast<int>(i), static_cast<int>(N + n1 + q), M(i, q));
        trips.emplace_back(static_cast<int>(N + n1 + q), static_cast<int>(i), std::conj(M(i, q)));
      }
  CSparse L(total, total);
  L.setFromTriplets(trips.begin(), trips.end());
  L.makeCompressed();

  Eigen::SparseLU<CSparse> lu;
  lu.compute(L);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::SaddleSingularity, "augmented saddle matrix is singular: " + lu.lastErrorMessage(), local.id);

  const auto nJ = static_cast<Eigen::Index>(local.J.size());
  if (nJ == 0) return finalize(local, Route::Mixed, {}, nullptr, opt, 0.0);

  CMat EJ = CMat::Zero(total, nJ);
  for (Eigen::Index c = 0; c < nJ; ++c) EJ(local.J[static_cast<std::size_t>(c)], c) = 1.0;
  const CMat Z = lu.solve(EJ);
  if (!Z.allFinite()) throw Error(ErrorCode::SaddleSingularity, "saddle solve produced non-finite values", local.id);
  const double res = (L * Z - EJ).norm() / std::sqrt(static_cast<double>(nJ));
  if (res > 1e-8) throw Error(ErrorCode::SaddleSingularity, "saddle solve residual " + std::to_string(res), local.id);

  CMat G(nJ, nJ);
  for (Eigen::Index r = 0; r < nJ; ++r) G.row(r) = Z.row(local.J[static_cast<std::size_t>(r)]);
  const CMat R = gram_factor(dense_block(local.P_gram, local.J, local.J));
  CMat H = R * G * R.adjoint();
  const double imag = hermitian_defect(H);
  H = 0.5 * (H + H.adjoint());

  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::SaddleSingularity, "dense eigensolver failed", local.id);
  std::vector<double> lam(static_cast<std::size_t>(nJ));
  for (Eigen::Index k = 0; k < nJ; ++k) lam[static_cast<std::size_t>(k)] = es.eigenvalues()[nJ - 1 - k];

  auto vectors = [&](int keep) {
    CMat W(nJ, keep);
    for (int k = 0; k < keep; ++k) W.col(k) = es.eigenvectors().col(nJ - 1 - k);
    const CMat X = Z * (R.adjoint() * W);
    return CMat(X.topRows(N));
  };
  return finalize(local, Route::Mixed, lam, vectors, opt, imag);
}

CSparse augmented_bplus(const LocalProblem& local)
{
  const Index N = local.size(), l = local.kernel_count();
  const CMat M = local.P_gram * local.kernel;
  std::vector<CTriplet> trips;
  for (Eigen::Index c = 0; c < local.Bplus_star.outerSize(); ++c)
    for (CSparse::InnerIterator it(local.Bplus_star, c); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (Index q = 0; q < l; ++q)
    for (Index i = 0; i < N; ++i)
      if (M(i, q) != Complex(0.0, 0.0)) {
        trips.emplace_back(static_cast<int>(i), static_cast<int>(N + q), M(i, q));
        trips.emplace_back(static_cast<int>(N + q), static_cast<int>(i), std::conj(M(i, q)));
      }
  CSparse A(N + l, N + l);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

LocalBasis solve_reduced_elliptic(const LocalProblem& local, const EigenOptions& opt)
{
  if (!local.b_is_bplus)
    throw Error(ErrorCode::RouteNotApplicable, "reduced route needs B equal to B+ on the oversampling domain", local.id);
  check_block_structure(local);
  const Index N = local.size(), n1 = local.n1, n2 = local.n2, l = local.kernel_count();

  // multipliers are ordered just before the last l primal dofs so that the
  // leading primal block seen by the unpivoted factorization is definite
  const CSparse Aug = augmented_bplus(local);
  std::vector<int> perm(static_cast<std::size_t>(N + l));
  for (Index i = 0; i < N - l; ++i) perm[static_cast<std::size_t>(i)] = static_cast<int>(i);
  for (Index q = 0; q < l; ++q) perm[static_cast<std::size_t>(N + q)] = static_cast<int>(N - l + q);
  for (Index i = N - l; i < N; ++i) perm[static_cast<std::size_t>(i)] = static_cast<int>(i + l);
  std::vector<CTriplet> trips;
  for (Eigen::Index c = 0; c < Aug.outerSize(); ++c)
    for (CSparse::InnerIterator it(Aug, c); it; ++it)
      trips.emplace_back(perm[static_cast<std::size_t>(it.row())], perm[static_cast<std::size_t>(it.col())], it.value());
  CSparse Ap(N + l, N + l);
  Ap.setFromTriplets(trips.begin(), trips.end());

  Eigen::SimplicialLDLT<CSparse, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt(Ap);
  if (ldlt.info() != Eigen::Success)
    throw Error(ErrorCode::FactorizationFailure, "augmented B+ factorization failed", local.id);
  {
    const RVec d = ldlt.vectorD().real().cwiseAbs();
    if (!(d.minCoeff() > 1e-13 * d.maxCoeff()))
      throw Error(ErrorCode::FactorizationFailure, "augmented B+ has a vanishing pivot", local.id);
  }

  IndexList i1(static_cast<std::size_t>(n1)), i2(static_cast<std::size_t>(n2));
  std::iota(i1.begin(), i1.end(), Index{0});
  std::iota(i2.begin(), i2.end(), n1);
  Eigen::SimplicialLDLT<CSparse> b11(extract(local.Bplus_star, i1, i1));
  if (b11.info() != Eigen::Success)
    throw Error(ErrorCode::FactorizationFailure, "interior block factorization failed", local.id);
  const CSparse B21 = extract(local.Bplus_star, i2, i1);

  const auto nJ = static_cast<Eigen::Index>(local.J.size());
  if (nJ == 0) return finalize(local, Route::Reduced, {}, nullptr, opt, 0.0);

  CMat EJ = CMat::Zero(n1, nJ);
  for (Eigen::Index c = 0; c < nJ; ++c) EJ(local.J[static_cast<std::size_t>(c)], c) = 1.0;
  const CMat p = b11.solve(EJ);
  CMat rhs = CMat::Zero(N + l, nJ);
  const CMat top = -(B21 * p);
  for (Index r = 0; r < n2; ++r) rhs.row(perm[static_cast<std::size_t>(n1 + r)]) = top.row(r);
  const CMat sol = ldlt.solve(rhs);
  CMat Phi(N, nJ);
  for (Index r = 0; r < N; ++r) Phi.row(r) = sol.row(perm[static_cast<std::size_t>(r)]);

  CMat W(nJ, nJ);
  for (Eigen::Index r = 0; r < nJ; ++r) W.row(r) = Phi.row(local.J[static_cast<std::size_t>(r)]);
  const CMat PJJ = dense_block(local.P_gram, local.J, local.J);
  std::vector<double> lam(static_cast<std::size_t>(nJ));
  double imag = 0.0;
  std::function<CMat(int)> vectors;
  Eigen::SelfAdjointEigenSolver<CMat> hs;
  Eigen::ComplexEigenSolver<CMat> cs;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(nJ));
  CMat R;
  if (l == 0) {
    // W is Hermitian here, so P_JJ W is similar to R W R^H with P_JJ = R^H R
    R = gram_factor(PJJ);
    CMat H = R * W * R.adjoint();
    imag = hermitian_defect(H);
    H = 0.5 * (H + H.adjoint());
    hs.compute(H);
    if (hs.info() != Eigen::Success) throw Error(ErrorCode::FactorizationFailure, "reduced eigensolver failed", local.id);
    for (Eigen::Index k = 0; k < nJ; ++k) lam[static_cast<std::size_t>(k)] = hs.eigenvalues()[nJ - 1 - k];
    vectors = [&](int keep) {
      CMat Y(nJ, keep);
      for (int k = 0; k < keep; ++k) Y.col(k) = hs.eigenvectors().col(nJ - 1 - k);
      return CMat(Phi * (R.adjoint() * Y));
    };
  } else {
    // the kernel constraint makes W an oblique projection, solve the non-Hermitian problem
    cs.compute(PJJ * W);
    if (cs.info() != Eigen::Success) throw Error(ErrorCode::FactorizationFailure, "reduced eigensolver failed", local.id);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return cs.eigenvalues()[a].real() > cs.eigenvalues()[b].real();
    });
    double scale = 0.0;
    for (Eigen::Index k = 0; k < nJ; ++k) {
      const Complex z = cs.eigenvalues()[order[static_cast<std::size_t>(k)]];
      imag = std::max(imag, std::abs(z.imag()));
      scale = std::max(scale, std::abs(z));
    }
    if (scale > 0) imag /= scale;
    // eigenfunctions are fixed by their trace on I2: extend it harmonically, remove the
    // kernel component, then Rayleigh-Ritz on the span
    const Eigen::Index m = nJ;
    CMat trace(n2, m);
    for (Eigen::Index k = 0; k < m; ++k)
      trace.col(k) = (Phi * cs.eigenvectors().col(order[static_cast<std::size_t>(k)])).tail(n2);
    CMat X = harmonic_extension(local, trace);
    const CMat PK = local.P_gram * local.kernel;
    X -= local.kernel * (local.kernel.adjoint() * PK).ldlt().solve(PK.adjoint() * X);
    Eigen::SelfAdjointEigenSolver<CMat> gs(X.adjoint() * (local.Bplus_star * X));
    const RVec g = gs.eigenvalues();
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < m; ++k)
      if (g[k] > 1e-12 * g[m - 1]) ++rank;
    R = X * gs.eigenvectors().rightCols(rank) * g.tail(rank).cwiseSqrt().cwiseInverse().asDiagonal();
    CMat H = R.adjoint() * (local.P_gram * R);
    H = 0.5 * (H + H.adjoint());
    hs.compute(H);
    if (hs.info() != Eigen::Success) throw Error(ErrorCode::FactorizationFailure, "reduced eigensolver failed", local.id);
    lam.assign(static_cast<std::size_t>(rank), 0.0);
    for (Eigen::Index k = 0; k < rank; ++k) lam[static_cast<std::size_t>(k)] = hs.eigenvalues()[rank - 1 - k];
    vectors = [&, rank](int keep) {
      CMat Y(rank, keep);
      for (int k = 0; k < keep; ++k) Y.col(k) = hs.eigenvectors().col(rank - 1 - k);
      return CMat(R * Y);
    };
  }
  LocalBasis basis = finalize(local, Route::Reduced, lam, vectors, opt, imag);

  if (opt.reference) {
    const int count = std::min<int>(10, static_cast<int>(std::min(basis.lambdas.size(), opt.reference->lambdas.size())));
    const double gap = spectrum_discrepancy(basis, *opt.reference, count);
    if (gap > opt.consistency_tol)
      throw Error(ErrorCode::SolverInconsistency,
                  "reduced and reference spectra differ by " + std::to_string(gap), local.id);
  }
  return basis;
}

CMat harmonic_basis(const LocalProblem& local, Index limit)
{
  if (local.n2 > limit)
    throw Error(ErrorCode::OracleTooLarge,
                std::to_string(local.n2) + " boundary dofs exceed the dense limit " + std::to_string(limit), local.id);
  const CMat I = CMat::Identity(local.n2, local.n2);
  return harmonic_extension(local, I);
}

namespace {
using Quad = boost::multiprecision::float128;
}  // namespace
}  // namespace msgfem

// the generic version asks NumTraits for infinity, which the boost traits lack
template <>
struct Eigen::internal::hypot_impl<msgfem::Quad> {
  static msgfem::Quad run(const msgfem::Quad& x, const msgfem::Quad& y) { return boost::multiprecision::hypot(x, y); }
};

namespace msgfem {
namespace {

template <class T>
struct Wider {
  using type = long double;
};
template <>
struct Wider<std::complex<long double>> {
  using type = std::complex<long double>;
};

template <class T>
struct IsComplex : std::false_type {};
template <class R>
struct IsComplex<std::complex<R>> : std::true_type {};

template <class To, class From>
To convert_scalar(const From& v)
{
  if constexpr (std::is_same_v<To, From>)
    return v;
  else if constexpr (IsComplex<From>::value && IsComplex<To>::value)
    return To(static_cast<typename To::value_type>(v.real()), static_cast<typename To::value_type>(v.imag()));
  else if constexpr (IsComplex<From>::value)
    return To(v.real());
  else if constexpr (IsComplex<To>::value)
    return To(static_cast<typename To::value_type>(v), 0);
  else
    return static_cast<To>(v);
}

template <class From, class To>
Eigen::Matrix<To, Eigen::Dynamic, Eigen::Dynamic> recast(const Eigen::Matrix<From, Eigen::Dynamic, Eigen::Dynamic>& M)
{
  Eigen::Matrix<To, Eigen::Dynamic, Eigen::Dynamic> out(M.rows(), M.cols());
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i) out(i, j) = convert_scalar<To>(M(i, j));
  return out;
}

template <class T>
Eigen::SparseMatrix<T> convert(const CSparse& A)
{
  Eigen::SparseMatrix<T> out(A.rows(), A.cols());
  std::vector<Eigen::Triplet<T>> trip;
  trip.reserve(static_cast<std::size_t>(A.nonZeros()));
  for (Eigen::Index c = 0; c < A.outerSize(); ++c)
    for (CSparse::InnerIterator it(A, c); it; ++it) trip.emplace_back(it.row(), it.col(), convert_scalar<T>(it.value()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

bool real_forms(const LocalProblem& local)
{
  for (const CSparse* A : {&local.B_star, &local.Bplus_star, &local.P_factor})
    for (Eigen::Index c = 0; c < A->outerSize(); ++c)
      for (CSparse::InnerIterator it(*A, c); it; ++it)
        if (it.value().imag() != 0.0) return false;
  return local.kernel.size() == 0 || local.kernel.imag().cwiseAbs().maxCoeff() == 0.0;
}

// lambda = sigma^2 of F_P Hb measured in the B+ Gram. The harmonic extension,
// F_P Hb and the SVD run in T; the Gram only needs relative accuracy and stays in L.
template <class T>
LocalBasis oracle_spectrum(const LocalProblem& local, const EigenOptions& opt)
{
  using L = typename Wider<T>::type;
  using TMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using LMat = Eigen::Matrix<L, Eigen::Dynamic, Eigen::Dynamic>;
  const Index n1 = local.n1, n2 = local.n2, l = local.kernel_count();

  IndexList i1(static_cast<std::size_t>(n1)), i2(static_cast<std::size_t>(n2));
  std::iota(i1.begin(), i1.end(), Index{0});
  std::iota(i2.begin(), i2.end(), n1);
  TMat Hb(n1 + n2, n2);
  Hb.bottomRows(n2).setIdentity();
  if (n1 > 0) {
    const Eigen::SparseMatrix<T> B11 = convert<T>(extract(local.B_star, i1, i1));
    const TMat B12 = TMat(convert<T>(extract(local.B_star, i1, i2)));
    Eigen::SparseLU<Eigen::SparseMatrix<T>> lu(B11);
    if (lu.info() != Eigen::Success)
      throw Error(ErrorCode::LocalSolveFailure, "interior block factorization failed", local.id);
    Hb.topRows(n1) = -lu.solve(B12);
  }
  const TMat A = convert<T>(local.P_factor) * Hb;
  const LMat HbL = recast<T, L>(Hb);
  const LMat Bh = HbL.adjoint() * (convert<L>(local.Bplus_star) * HbL);

  // P-orthogonal complement of the kernel coordinates
  TMat Q = TMat::Identity(n2, n2);
  if (l > 0) {
    const TMat kc = recast<Complex, T>(CMat(local.kernel.bottomRows(n2)));
    Eigen::HouseholderQR<TMat> qr(A.adjoint() * (A * kc));
    Q = qr.householderQ() * TMat::Identity(n2, n2);
  }
  const TMat Qc = Q.rightCols(n2 - l);
  const LMat QcL = recast<T, L>(Qc);
  LMat Bq = QcL.adjoint() * Bh * QcL;
  Bq = L(0.5L) * (Bq + Bq.adjoint());
  Eigen::LLT<LMat> llt(Bq);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::FactorizationFailure, "projected B+ is not definite on the kernel complement", local.id);
  const TMat U = recast<L, T>(LMat(llt.matrixU()));
  const TMat M = U.template triangularView<Eigen::Upper>().template solve<Eigen::OnTheRight>(TMat(A * Qc));

  // the singular values of M are those of its triangular factor
  Eigen::HouseholderQR<TMat> mqr(M);
  const Eigen::Index r = std::min(M.rows(), M.cols());
  const TMat R = mqr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
  Eigen::BDCSVD<TMat> svd(R, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  std::vector<double> lam(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index k = 0; k < sv.size(); ++k) lam[static_cast<std::size_t>(k)] = static_cast<double>(sv[k] * sv[k]);
  auto vectors = [&](int keep) {
    const TMat Y = U.template triangularView<Eigen::Upper>().solve(TMat(svd.matrixV().leftCols(keep)));
    return recast<T, Complex>(TMat(Hb * (Qc * Y)));
  };
  return finalize(local, Route::Oracle, lam, vectors, opt, 0.0);
}

}  // namespace

LocalBasis oracle_harmonic_eigen(const LocalProblem& local, const EigenOptions& opt)
{
  if (local.n2 > opt.oracle_limit)
    throw Error(ErrorCode::OracleTooLarge,
                std::to_string(local.n2) + " boundary dofs exceed the dense limit " + std::to_string(opt.oracle_limit),
                local.id);
  if (local.n2 - local.kernel_count() <= 0) return finalize(local, Route::Oracle, {}, nullptr, opt, 0.0);
  // quadruple precision for real forms, long double otherwise
  if (real_forms(local)) return oracle_spectrum<Quad>(local, opt);
  return oracle_spectrum<std::complex<long double>>(local, opt);
}

LocalBasis solve_local(const LocalProblem& local, Route route, const EigenOptions& opt)
{
  switch (route) {
    case Route::Mixed: return solve_mixed_eigen(local, opt);
    case Route::Reduced: return solve_reduced_elliptic(local, opt);
    case Route::Oracle: return oracle_harmonic_eigen(local, opt);
  }
  throw Error(ErrorCode::InvalidInput, "unknown route");
}

double local_error_certificate(const LocalBasis& basis, int n)
{
  if (n < 0 || n > std::max(basis.count(), static_cast<int>(basis.lambdas.size())))
    throw Error(ErrorCode::IndexOutOfRange,
                "certificate index " + std::to_string(n) + " outside the computed spectrum of size " +
                    std::to_string(std::max(basis.count(), static_cast<int>(basis.lambdas.size()))),
                basis.subdomain);
  return std::sqrt(std::max(0.0, basis.lambda_after(n)));
}

double local_projection_error(const LocalProblem& local, const LocalBasis& basis, const CVec& r, int n)
{
  if (n < 0 || n > basis.count())
    throw Error(ErrorCode::IndexOutOfRange, "projection uses more eigenvectors than computed", local.id);
  CMat S(local.size(), basis.kernel_count() + n);
  S << basis.kernel, basis.vectors.leftCols(n);
  CVec e = r;
  if (S.cols() > 0) {
    const CMat PS = local.P_gram * S;
    const CMat G = S.adjoint() * PS;
    const CVec c = G.completeOrthogonalDecomposition().solve(PS.adjoint() * r);
    e -= S * c;
  }
  return form_norm(local.P_gram, e);
}

double spectrum_discrepancy(const LocalBasis& a, const LocalBasis& b, int count)
{
  count = std::min<int>(count, static_cast<int>(std::min(a.lambdas.size(), b.lambdas.size())));
  double worst = 0.0;
  for (int j = 0; j < count; ++j) {
    const double x = a.lambdas[static_cast<std::size_t>(j)], y = b.lambdas[static_cast<std::size_t>(j)];
    const double d = std::abs(x - y) / std::max(std::abs(y), 1e-300);
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace msgfem
