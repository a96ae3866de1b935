#include "msgfem/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

namespace msgfem {

Table& StudyReport::table(const std::string& name, std::vector<std::string> header)
{
  tables.push_back({name, std::move(header), {}});
  return tables.back();
}

const Table* StudyReport::find(const std::string& name) const
{
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

std::string StudyReport::csv(bool with_timing) const
{
  std::ostringstream os;
  os << "# msgfem " << command << "\n";
  os << "# config_hash: " << config_hash << "\n";
  if (with_timing) os << "# timing: seconds=" << fmt(seconds) << "\n";
  for (const auto& b : breaches) os << "# breach: " << b << "\n";
  for (const auto& t : tables) {
    os << "\n# table: " << t.name << "\n";
    for (std::size_t c = 0; c < t.header.size(); ++c) os << (c ? "," : "") << t.header[c];
    os << "\n";
    for (const auto& r : t.rows) {
      for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
      os << "\n";
    }
  }
  return os.str();
}

std::string fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(Index v) { return std::to_string(v); }

void parallel_for(int count, int jobs, const std::function<void(int)>& fn)
{
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(count, 0)));
  auto guarded = [&](int i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  jobs = std::max(1, std::min(jobs, count));
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w)
      workers.push_back(std::async(std::launch::async, [&] {
        for (int i = next++; i < count; i = next++) guarded(i);
      }));
    for (auto& f : workers) f.get();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ProblemDef make_problem(const RunConfig& cfg, const Mesh2D& mesh)
{
  ProblemDef p;
  const std::string kind = cfg.str("problem.kind", "diffusion");
  if (kind == "diffusion")
    p.kind = ProblemKind::Diffusion;
  else if (kind == "convection-diffusion")
    p.kind = ProblemKind::ConvectionDiffusion;
  else if (kind == "helmholtz")
    p.kind = ProblemKind::Helmholtz;
  else
    throw Error(ErrorCode::Config, "unknown problem.kind '" + kind + "'");

  const std::string coef = cfg.str("problem.coefficient", "constant");
  const auto seed = static_cast<std::uint64_t>(cfg.integer("problem.seed", 1));
  CoefficientSpec spec;
  if (coef == "constant")
    spec = coeff::Constant{cfg.num("problem.a", 1.0)};
  else if (coef == "checkerboard")
    spec = coeff::Checkerboard{cfg.integer("problem.cells", 4), cfg.num("problem.lo", 1.0), cfg.num("problem.hi", 1.0)};
  else if (coef == "random")
    spec = coeff::RandomContrast{cfg.num("problem.lo", 1.0), cfg.num("problem.hi", 1.0)};
  else
    throw Error(ErrorCode::Config, "unknown problem.coefficient '" + coef + "'");
  p.a = make_coefficient(spec, mesh, seed);

  const auto ne = static_cast<std::size_t>(mesh.num_elems());
  const auto nb = mesh.boundary_edges.size();
  p.f.assign(static_cast<std::size_t>(mesh.num_nodes()), cfg.num("problem.f", 1.0));
  if (p.kind == ProblemKind::ConvectionDiffusion) {
    const auto b = cfg.nums("problem.b", {1.0, 0.0});
    if (b.size() != 2) throw Error(ErrorCode::Config, "problem.b expects two components");
    p.b.assign(ne, {b[0], b[1]});
  }
  if (p.kind == ProblemKind::Helmholtz) {
    p.k = cfg.num("problem.k", 0.0);
    p.V.assign(ne, cfg.num("problem.V", 1.0));
    p.beta.assign(nb, cfg.num("problem.beta", 1.0));
    p.g.assign(nb, cfg.num("problem.g", 0.0));
  }
  validate(p, mesh);
  return p;
}

namespace {

EigenOptions eigen_options(const RunConfig& cfg)
{
  EigenOptions opt;
  opt.filter = cfg.num("spectral.filter", opt.filter);
  return opt;
}

Cover cover_from(const RunConfig& cfg, const Mesh2D& mesh, int oversampling)
{
  return build_cover(mesh, cfg.integer("cover.mx", 1), cfg.integer("cover.my", cfg.integer("cover.mx", 1)),
                     cfg.integer("cover.overlap", 1), oversampling);
}

StudyReport start(const std::string& command, const RunConfig& cfg)
{
  StudyReport r;
  r.command = command;
  r.config_hash = cfg.hash();
  return r;
}

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int subdomain_from(const RunConfig& cfg, const Cover& cover)
{
  const auto c = cfg.integers("study.subdomain", {cover.mx / 2, cover.my / 2});
  if (c.size() != 2 || c[0] < 0 || c[1] < 0 || c[0] >= cover.mx || c[1] >= cover.my)
    throw Error(ErrorCode::Config, "study.subdomain expects coarse cell indices cx, cy inside the cover");
  return cover.id_of(c[0], c[1]);
}

std::vector<int> fixed_dims(const Pipeline& pipe, int n)
{
  return std::vector<int>(pipe.bases.size(), n);
}

bool elliptic_bound_applies(const ProblemDef& p) { return p.kind == ProblemKind::Diffusion; }

}  // namespace

Pipeline build_pipeline(const RunConfig& cfg, int jobs)
{
  Pipeline pipe;
  pipe.mesh = build_unit_square_mesh(cfg.integer("mesh.n"));
  pipe.problem = make_problem(cfg, pipe.mesh);
  pipe.cover = cover_from(cfg, pipe.mesh, cfg.integer("cover.oversampling", 1));
  const Route route = parse_route(cfg.str("solver.route", "mixed"));
  const EigenOptions opt = eigen_options(cfg);
  // eigenvectors beyond the resolved spectrum are only computed when a fixed dimension asks for them
  int max_dim = cfg.integer("spectral.n_per_subdomain", 0);
  for (int d : cfg.integers("spectral.n_list", {})) max_dim = std::max(max_dim, d);

  const int M = pipe.cover.size();
  pipe.locals.resize(static_cast<std::size_t>(M));
  pipe.particulars.resize(static_cast<std::size_t>(M));
  pipe.bases.resize(static_cast<std::size_t>(M));
  const CVec F = assemble_load(pipe.problem, pipe.mesh);
  parallel_for(M, jobs, [&](int i) {
    const auto si = static_cast<std::size_t>(i);
    pipe.locals[si] = assemble_local(pipe.problem, pipe.mesh, pipe.cover.subdomains[si]);
    pipe.particulars[si] = solve_particular(pipe.locals[si], pipe.locals[si].restrict_global(F));
    EigenOptions o = opt;
    o.n_ev = std::max(0, max_dim - pipe.locals[si].kernel_count());
    pipe.bases[si] = solve_local(pipe.locals[si], route, o);
  });
  pipe.u_h = solve_fine_reference(pipe.problem, pipe.mesh);
  return pipe;
}

SolveOutcome solve_with_dims(const Pipeline& pipe, const std::vector<int>& dims)
{
  SolveOutcome out;
  out.dims = dims;
  const GlobalSpace space = build_global_space(pipe.mesh, pipe.cover, pipe.locals, pipe.bases, pipe.particulars, dims);
  out.solution = galerkin_solve(pipe.problem, pipe.mesh, space, &pipe.u_h);
  out.solution.bound = error_bound(pipe.cover, pipe.bases, dims);
  return out;
}

StudyReport cmd_solve(const RunConfig& cfg, int jobs)
{
  const auto t0 = Clock::now();
  StudyReport rep = start("solve", cfg);
  const bool has_n = cfg.has("spectral.n_per_subdomain"), has_tau = cfg.has("spectral.tau");
  if (has_n == has_tau) throw Error(ErrorCode::Config, "exactly one of spectral.n_per_subdomain and spectral.tau is required");

  const Pipeline pipe = build_pipeline(cfg, jobs);
  const double tau = cfg.num("spectral.tau", 0.0);
  const std::vector<int> dims =
      has_tau ? select_dims(pipe.bases, pipe.cover, tau) : fixed_dims(pipe, cfg.integer("spectral.n_per_subdomain"));
  const SolveOutcome out = solve_with_dims(pipe, dims);
  const GlobalSolution& s = out.solution;

  Table& sub = rep.table("subdomains", {"subdomain_id", "n_i", "kernel_count", "lambda_next"});
  for (std::size_t i = 0; i < pipe.bases.size(); ++i) {
    const auto& b = pipe.bases[i];
    sub.add({fmt(static_cast<int>(i)), fmt(dims[i]), fmt(b.kernel_count()), fmt(b.lambda_after(dims[i] - b.kernel_count()))});
  }
  Table& sum = rep.table("summary", {"err_energy_rel", "err_l2_rel", "bound", "zeta", "zeta_star", "galerkin_residual",
                                     "total_dim", "pruned"});
  int total = 0;
  for (int d : dims) total += d;
  sum.add({fmt(s.err_energy_rel), fmt(s.err_l2_rel), fmt(s.bound), fmt(pipe.cover.zeta), fmt(pipe.cover.zeta_star),
           fmt(s.galerkin_residual), fmt(total), fmt(static_cast<int>(s.pruned.size()))});

  if (s.galerkin_residual > 1e-8) rep.breaches.push_back("galerkin_residual=" + fmt(s.galerkin_residual) + " > 1e-8");
  if (elliptic_bound_applies(pipe.problem) && s.err_energy_rel > s.bound)
    rep.breaches.push_back("err_energy_rel=" + fmt(s.err_energy_rel) + " > bound=" + fmt(s.bound));
  if (has_tau && elliptic_bound_applies(pipe.problem) && s.err_energy_rel > tau)
    rep.breaches.push_back("err_energy_rel=" + fmt(s.err_energy_rel) + " > tau=" + fmt(tau));
  rep.seconds = since(t0);
  return rep;
}

StudyReport cmd_study_global(const RunConfig& cfg, int jobs)
{
  const auto t0 = Clock::now();
  StudyReport rep = start("study-global", cfg);
  const Pipeline pipe = build_pipeline(cfg, jobs);
  const auto n_list = cfg.integers("spectral.n_list", {4, 8, 12});
  const bool elliptic = elliptic_bound_applies(pipe.problem);

  Table& runs = rep.table("runs", {"n_i", "total_dim", "err_energy_rel", "err_l2_rel", "bound", "galerkin_residual"});
  std::vector<SolveOutcome> outs(n_list.size());
  parallel_for(static_cast<int>(n_list.size()), jobs, [&](int r) {
    outs[static_cast<std::size_t>(r)] = solve_with_dims(pipe, fixed_dims(pipe, n_list[static_cast<std::size_t>(r)]));
  });
  std::vector<double> x, y;
  for (std::size_t r = 0; r < n_list.size(); ++r) {
    const auto& s = outs[r].solution;
    const int total = n_list[r] * pipe.cover.size();
    runs.add({fmt(n_list[r]), fmt(total), fmt(s.err_energy_rel), fmt(s.err_l2_rel), fmt(s.bound), fmt(s.galerkin_residual)});
    if (s.galerkin_residual > 1e-8)
      rep.breaches.push_back("n_i=" + fmt(n_list[r]) + " galerkin_residual=" + fmt(s.galerkin_residual) + " > 1e-8");
    if (elliptic && s.err_energy_rel > s.bound)
      rep.breaches.push_back("n_i=" + fmt(n_list[r]) + " err_energy_rel=" + fmt(s.err_energy_rel) + " > bound=" + fmt(s.bound));
    if (elliptic && r > 0 && n_list[r] >= n_list[r - 1] &&
        s.err_energy_rel > outs[r - 1].solution.err_energy_rel * (1 + 1e-8))
      rep.breaches.push_back("err_energy_rel increased from n_i=" + fmt(n_list[r - 1]) + " to n_i=" + fmt(n_list[r]));
    if (s.err_energy_rel > 0) {
      x.push_back(std::sqrt(static_cast<double>(n_list[r])));
      y.push_back(std::log(s.err_energy_rel));
    }
  }
  if (x.size() >= 2) {
    const LinearFit f = linear_fit(x, y);
    Table& fit = rep.table("fit", {"points", "slope", "intercept", "r2"});
    fit.add({fmt(f.points), fmt(f.slope), fmt(f.intercept), fmt(f.r2)});
    if (cfg.has("study.min_r2") && f.r2 < cfg.num("study.min_r2"))
      rep.breaches.push_back("global fit r2=" + fmt(f.r2) + " < " + cfg.str("study.min_r2"));
  }
  if (cfg.has("spectral.tau")) {
    const double tau = cfg.num("spectral.tau");
    const auto dims = select_dims(pipe.bases, pipe.cover, tau);
    const SolveOutcome out = solve_with_dims(pipe, dims);
    Table& ad = rep.table("adaptive", {"tau", "n_min", "n_max", "total_dim", "err_energy_rel", "bound"});
    int total = 0;
    for (int d : dims) total += d;
    ad.add({fmt(tau), fmt(*std::min_element(dims.begin(), dims.end())), fmt(*std::max_element(dims.begin(), dims.end())),
            fmt(total), fmt(out.solution.err_energy_rel), fmt(out.solution.bound)});
    if (elliptic && out.solution.err_energy_rel > tau)
      rep.breaches.push_back("adaptive err_energy_rel=" + fmt(out.solution.err_energy_rel) + " > tau=" + fmt(tau));
  }
  rep.seconds = since(t0);
  return rep;
}

namespace {

struct DecayFit {
  LinearFit fit;
  int count = 0;
  int lo = 0, hi = 0;
  std::vector<double> lambdas;
  double kHstar = 0.0;
};

DecayFit decay_for(const RunConfig& cfg, const Mesh2D& mesh, const ProblemDef& problem, int oversampling)
{
  const Cover cover = cover_from(cfg, mesh, oversampling);
  const int id = subdomain_from(cfg, cover);
  const Subdomain& sub = cover.subdomains[static_cast<std::size_t>(id)];
  const LocalProblem lp = assemble_local(problem, mesh, sub);
  const LocalBasis basis = solve_local(lp, parse_route(cfg.str("solver.route", "mixed")), eigen_options(cfg));

  DecayFit d;
  d.lambdas = basis.lambdas;
  d.count = static_cast<int>(basis.lambdas.size());
  d.lo = cfg.integer("study.n_min", 5);
  d.hi = std::min(cfg.integer("study.n_max", 30), d.count);
  const double Hstar = std::max(sub.omega_star.x1 - sub.omega_star.x0, sub.omega_star.y1 - sub.omega_star.y0) * mesh.h();
  d.kHstar = problem.k * Hstar;
  std::vector<double> x, y;
  for (int n = d.lo; n <= d.hi; ++n) {
    x.push_back(std::sqrt(static_cast<double>(n)));
    y.push_back(0.5 * std::log(basis.lambdas[static_cast<std::size_t>(n - 1)]));
  }
  if (x.size() >= 2) d.fit = linear_fit(x, y);
  return d;
}

}  // namespace

StudyReport cmd_study_eig_decay(const RunConfig& cfg, int jobs)
{
  const auto t0 = Clock::now();
  StudyReport rep = start("study-eig-decay", cfg);
  const Mesh2D mesh = build_unit_square_mesh(cfg.integer("mesh.n"));
  const ProblemDef problem = make_problem(cfg, mesh);
  const auto sweep = cfg.integers("study.oversampling_list", {cfg.integer("cover.oversampling", 1)});
  const double min_r2 = cfg.num("study.min_r2", 0.9);
  const bool compare_k0 = cfg.flag("study.compare_k0", false) && problem.kind == ProblemKind::Helmholtz;

  ProblemDef problem0 = problem;
  problem0.k = 0.0;
  std::vector<DecayFit> fits(sweep.size()), fits0(compare_k0 ? sweep.size() : 0);
  const int tasks = static_cast<int>(sweep.size()) * (compare_k0 ? 2 : 1);
  parallel_for(tasks, jobs, [&](int t) {
    const auto s = static_cast<std::size_t>(t) % sweep.size();
    if (static_cast<std::size_t>(t) < sweep.size())
      fits[s] = decay_for(cfg, mesh, problem, sweep[s]);
    else
      fits0[s] = decay_for(cfg, mesh, problem0, sweep[s]);
  });

  Table& spec = rep.table("spectrum", {"oversampling", "n", "lambda_n", "sqrt_lambda_n"});
  for (std::size_t s = 0; s < sweep.size(); ++s)
    for (std::size_t j = 0; j < fits[s].lambdas.size(); ++j)
      spec.add({fmt(sweep[s]), fmt(static_cast<int>(j + 1)), fmt(fits[s].lambdas[j]), fmt(std::sqrt(fits[s].lambdas[j]))});

  Table& fit = rep.table("fit", {"oversampling", "finite_count", "fit_lo", "fit_hi", "slope", "intercept", "r2", "k_Hstar"});
  for (std::size_t s = 0; s < sweep.size(); ++s) {
    const auto& d = fits[s];
    fit.add({fmt(sweep[s]), fmt(d.count), fmt(d.lo), fmt(d.hi), fmt(d.fit.slope), fmt(d.fit.intercept), fmt(d.fit.r2),
             fmt(d.kHstar)});
    if (d.fit.points < 2) {
      rep.breaches.push_back("oversampling=" + fmt(sweep[s]) + " resolved spectrum too short for a fit");
      continue;
    }
    if (d.fit.r2 < min_r2) rep.breaches.push_back("oversampling=" + fmt(sweep[s]) + " r2=" + fmt(d.fit.r2) + " < " + fmt(min_r2));
    if (!(d.fit.slope < 0)) rep.breaches.push_back("oversampling=" + fmt(sweep[s]) + " slope=" + fmt(d.fit.slope) + " >= 0");
  }
  if (cfg.flag("study.assert_monotone", true))
    for (std::size_t s = 1; s < sweep.size(); ++s)
      if (std::abs(fits[s].fit.slope) < std::abs(fits[s - 1].fit.slope))
        rep.breaches.push_back("|slope| decreased from oversampling=" + fmt(sweep[s - 1]) + " to " + fmt(sweep[s]));

  if (compare_k0) {
    Table& k0 = rep.table("k0", {"oversampling", "k_Hstar", "slope_k", "slope_k0", "ratio"});
    for (std::size_t s = 0; s < sweep.size(); ++s) {
      const double ratio = fits[s].fit.slope / fits0[s].fit.slope;
      k0.add({fmt(sweep[s]), fmt(fits[s].kHstar), fmt(fits[s].fit.slope), fmt(fits0[s].fit.slope), fmt(ratio)});
      if (fits[s].kHstar <= 1.0 && !(ratio >= 0.5 && ratio <= 2.0))
        rep.breaches.push_back("oversampling=" + fmt(sweep[s]) + " slope ratio to k=0 is " + fmt(ratio));
    }
  }
  rep.seconds = since(t0);
  return rep;
}

namespace {

CellRect cells_of(const RunConfig& cfg, const std::string& key, int n)
{
  const auto v = cfg.nums(key, {});
  if (v.size() != 4) throw Error(ErrorCode::Config, key + " expects x0, x1, y0, y1");
  int c[4];
  for (int i = 0; i < 4; ++i) {
    const double s = v[static_cast<std::size_t>(i)] * n;
    c[i] = static_cast<int>(std::lround(s));
    if (std::abs(s - c[i]) > 1e-9) throw Error(ErrorCode::Config, key + " does not align with the n=" + std::to_string(n) + " grid");
  }
  return {c[0], c[1], c[2], c[3]};
}

struct CaccioppoliRun {
  std::vector<double> lhs, ring, star, ratio;
};

CaccioppoliRun caccioppoli_at(const RunConfig& cfg, int n)
{
  const Mesh2D mesh = build_unit_square_mesh(n);
  const ProblemDef problem = make_problem(cfg, mesh);
  const CellRect D = cells_of(cfg, "study.d", n), Ds = cells_of(cfg, "study.d_star", n);
  const Subdomain sub = make_subdomain(mesh, 0, D, D, Ds);
  const LocalProblem lp = assemble_local(problem, mesh, sub);

  // physical gap between D and the artificial part of the boundary of D*
  double delta = INFINITY;
  if (sub.artificial_sides & 1) delta = std::min(delta, (D.x0 - Ds.x0) * mesh.h());
  if (sub.artificial_sides & 2) delta = std::min(delta, (Ds.x1 - D.x1) * mesh.h());
  if (sub.artificial_sides & 4) delta = std::min(delta, (D.y0 - Ds.y0) * mesh.h());
  if (sub.artificial_sides & 8) delta = std::min(delta, (Ds.y1 - D.y1) * mesh.h());
  if (!(delta > 0) || !std::isfinite(delta)) throw Error(ErrorCode::Config, "study.d must sit strictly inside study.d_star");

  const IndexList d_elems = sub.omega_elems;
  IndexList ring_elems;
  {
    std::vector<char> in_d(static_cast<std::size_t>(mesh.num_elems()), 0);
    for (Index e : d_elems) in_d[static_cast<std::size_t>(e)] = 1;
    for (Index e : sub.omega_star_elems)
      if (!in_d[static_cast<std::size_t>(e)]) ring_elems.push_back(e);
  }
  const CSparse Sd = extract(assemble_form(problem, mesh, FormKind::Bplus, d_elems).matrix, lp.dofs, lp.dofs);
  const CSparse Mring = extract(assemble_form(problem, mesh, FormKind::Mass, ring_elems).matrix, lp.dofs, lp.dofs);
  const CSparse Mstar = extract(assemble_form(problem, mesh, FormKind::Mass, sub.omega_star_elems).matrix, lp.dofs, lp.dofs);
  const double cII = problem.kind == ProblemKind::Helmholtz ? problem.k * problem.v_max() : 0.0;

  const double w = (Ds.x1 - Ds.x0) * mesh.h(), ht = (Ds.y1 - Ds.y0) * mesh.h();
  const double per = 2 * (w + ht);
  std::vector<double> t(static_cast<std::size_t>(lp.n2));
  for (Index b = 0; b < lp.n2; ++b) {
    const Point& p = mesh.nodes[static_cast<std::size_t>(lp.dofs[static_cast<std::size_t>(lp.n1 + b)])];
    const double x = p.x - Ds.x0 * mesh.h(), y = p.y - Ds.y0 * mesh.h();
    double s;
    if (std::abs(y) < 1e-12)
      s = x;
    else if (std::abs(x - w) < 1e-12)
      s = w + y;
    else if (std::abs(y - ht) < 1e-12)
      s = w + ht + (w - x);
    else
      s = 2 * w + ht + (ht - y);
    t[static_cast<std::size_t>(b)] = s;
  }

  const int samples = cfg.integer("study.samples", 100), modes = cfg.integer("study.modes", 8);
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.integer("study.seed", 11)));
  std::normal_distribution<double> normal(0.0, 1.0);
  CMat bv(lp.n2, samples);
  for (int s = 0; s < samples; ++s) {
    std::vector<double> a(static_cast<std::size_t>(modes + 1)), c(static_cast<std::size_t>(modes + 1));
    for (int m = 0; m <= modes; ++m) {
      a[static_cast<std::size_t>(m)] = normal(rng) / (1 + m);
      c[static_cast<std::size_t>(m)] = normal(rng) / (1 + m);
    }
    for (Index b = 0; b < lp.n2; ++b) {
      double v = 0;
      for (int m = 0; m <= modes; ++m) {
        const double arg = 2 * M_PI * m * t[static_cast<std::size_t>(b)] / per;
        v += a[static_cast<std::size_t>(m)] * std::cos(arg) + c[static_cast<std::size_t>(m)] * std::sin(arg);
      }
      bv(b, s) = v;
    }
  }
  const CMat U = harmonic_extension(lp, bv);

  CaccioppoliRun run;
  for (int s = 0; s < samples; ++s) {
    const CVec u = U.col(s);
    const double lhs = std::pow(form_norm(Sd, u), 2), ring = std::pow(form_norm(Mring, u), 2), star = std::pow(form_norm(Mstar, u), 2);
    const double rhs = ring / (delta * delta) + cII * cII * star;
    run.lhs.push_back(lhs);
    run.ring.push_back(ring);
    run.star.push_back(star);
    run.ratio.push_back(rhs > 0 ? lhs / rhs : 0.0);
  }
  return run;
}

}  // namespace

StudyReport cmd_caccioppoli(const RunConfig& cfg, int jobs)
{
  const auto t0 = Clock::now();
  StudyReport rep = start("caccioppoli", cfg);
  const int n = cfg.integer("mesh.n");
  const auto res = cfg.integers("study.resolutions", {n, 2 * n});
  std::vector<CaccioppoliRun> runs(res.size());
  parallel_for(static_cast<int>(res.size()), jobs,
               [&](int r) { runs[static_cast<std::size_t>(r)] = caccioppoli_at(cfg, res[static_cast<std::size_t>(r)]); });

  Table& samples = rep.table("samples", {"n", "sample_id", "lhs", "l2_ring", "l2_star", "ratio"});
  Table& sum = rep.table("summary", {"n", "max_ratio", "median_ratio"});
  std::vector<double> maxima;
  for (std::size_t r = 0; r < res.size(); ++r) {
    for (std::size_t s = 0; s < runs[r].ratio.size(); ++s)
      samples.add({fmt(res[r]), fmt(static_cast<int>(s)), fmt(runs[r].lhs[s]), fmt(runs[r].ring[s]), fmt(runs[r].star[s]),
                   fmt(runs[r].ratio[s])});
    const double mx = runs[r].ratio.empty() ? 0.0 : *std::max_element(runs[r].ratio.begin(), runs[r].ratio.end());
    maxima.push_back(mx);
    sum.add({fmt(res[r]), fmt(mx), fmt(median(runs[r].ratio))});
    if (!std::isfinite(mx)) rep.breaches.push_back("n=" + fmt(res[r]) + " max ratio is not finite");
  }
  if (maxima.size() >= 2) {
    const double tol = cfg.num("study.stability_tol", 0.2);
    Table& st = rep.table("stability", {"n_coarse", "n_fine", "relative_change"});
    for (std::size_t r = 1; r < maxima.size(); ++r) {
      const double change = maxima[0] > 0 ? std::abs(maxima[r] - maxima[0]) / maxima[0] : 0.0;
      st.add({fmt(res[0]), fmt(res[r]), fmt(change)});
      if (change > tol) rep.breaches.push_back("max ratio changed by " + fmt(change) + " > " + fmt(tol));
    }
  }
  rep.seconds = since(t0);
  return rep;
}

StudyReport cmd_green_rank(const RunConfig& cfg, int /*jobs*/)
{
  const auto t0 = Clock::now();
  StudyReport rep = start("green-rank", cfg);
  const Mesh2D mesh = build_unit_square_mesh(cfg.integer("mesh.n"));
  const ProblemDef problem = make_problem(cfg, mesh);
  auto box = [&](const std::string& key, std::vector<double> fallback) {
    const auto v = cfg.nums(key, fallback);
    if (v.size() != 4) throw Error(ErrorCode::Config, key + " expects x0, x1, y0, y1");
    return Box{v[0], v[1], v[2], v[3]};
  };
  const BlockPair pair = make_block_pair(problem, mesh, box("study.box1", {0, 0.25, 0, 0.25}), box("study.box2", {0.75, 1, 0.75, 1}));
  const auto tols = cfg.nums("study.tolerances", {1e-2, 1e-4, 1e-6, 1e-8});
  const int fit_lo = cfg.integer("study.fit_lo", 2), fit_hi = cfg.integer("study.fit_hi", 15);
  // real matrices get the extended computation, the spectrum falls under double rounding well before n = 15
  const bool extended = problem.scalar_field() == ScalarField::Real;
  const GreenBlockReport g =
      extended ? separability_report(green_block_sigmas_extended(problem, mesh, pair), extended_noise_level(pair), tols, fit_lo, fit_hi)
               : separability_report(green_block(FineSolver(problem, mesh), pair), tols, fit_lo, fit_hi);

  Table& sig = rep.table("sigmas", {"n", "sigma_n"});
  for (std::size_t j = 0; j < g.sigmas.size(); ++j) sig.add({fmt(static_cast<int>(j + 1)), fmt(g.sigmas[j])});
  Table& rk = rep.table("ranks", {"epsilon", "rank"});
  for (std::size_t t = 0; t < tols.size(); ++t) rk.add({fmt(tols[t]), fmt(g.ranks[t])});

  Table& growth = rep.table("rank_growth", {"epsilon", "rank_eps", "rank_eps_squared", "excess_over_4x"});
  for (double eps : tols) {
    const auto r = separability_report(g.sigmas, 0.0, {eps, eps * eps}, 1, 1).ranks;
    growth.add({fmt(eps), fmt(r[0]), fmt(r[1]), fmt(r[1] - 4 * r[0])});
  }
  const double s1 = g.sigmas.empty() ? 0.0 : g.sigmas[0];
  const double s10 = g.sigmas.size() >= 10 ? g.sigmas[9] : 0.0;
  Table& sum = rep.table("summary", {"digits", "rho", "d1_size", "d2_size", "sigma_1", "sigma10_over_sigma1", "fit_lo",
                                     "fit_hi", "slope", "intercept", "r2"});
  sum.add({fmt(extended ? 50 : 16), fmt(pair.rho), fmt(static_cast<int>(pair.D1.size())), fmt(static_cast<int>(pair.D2.size())), fmt(s1),
           fmt(s1 > 0 ? s10 / s1 : 0.0), fmt(g.fit_lo), fmt(g.fit_hi), fmt(g.fit.slope), fmt(g.fit.intercept), fmt(g.fit.r2)});
  for (std::size_t j = 1; j < g.sigmas.size(); ++j)
    if (g.sigmas[j] > g.sigmas[j - 1] || g.sigmas[j] < 0) rep.breaches.push_back("singular values are not sorted");
  rep.seconds = since(t0);
  return rep;
}

StudyReport cmd_oracle_check(const RunConfig& cfg, int jobs)
{
  const auto t0 = Clock::now();
  StudyReport rep = start("oracle-check", cfg);
  const Mesh2D mesh = build_unit_square_mesh(cfg.integer("mesh.n"));
  const ProblemDef problem = make_problem(cfg, mesh);
  const Cover cover = cover_from(cfg, mesh, cfg.integer("cover.oversampling", 1));
  const int count = cfg.integer("study.n_ev", 10);
  const double tol = cfg.num("study.tol", 1e-6);
  const EigenOptions opt = eigen_options(cfg);

  struct Row {
    int l = 0;
    Index n2 = 0;
    int fm = 0, fo = 0, fr = -1;
    double dmo = 0, dmr = -1, dro = -1, imag = 0;
  };
  std::vector<Row> rows(static_cast<std::size_t>(cover.size()));
  parallel_for(cover.size(), jobs, [&](int i) {
    const LocalProblem lp = assemble_local(problem, mesh, cover.subdomains[static_cast<std::size_t>(i)]);
    Row& r = rows[static_cast<std::size_t>(i)];
    const LocalBasis m = solve_mixed_eigen(lp, opt);
    const LocalBasis o = oracle_harmonic_eigen(lp, opt);
    r.l = lp.kernel_count();
    r.n2 = lp.n2;
    r.fm = static_cast<int>(m.lambdas.size());
    r.fo = static_cast<int>(o.lambdas.size());
    r.dmo = spectrum_discrepancy(m, o, count);
    r.imag = m.imag_residue;
    if (lp.b_is_bplus) {
      const LocalBasis red = solve_reduced_elliptic(lp, opt);
      r.fr = static_cast<int>(red.lambdas.size());
      r.dmr = spectrum_discrepancy(m, red, count);
      r.dro = spectrum_discrepancy(red, o, count);
      r.imag = std::max(r.imag, red.imag_residue);
    }
  });

  Table& t = rep.table("routes", {"subdomain_id", "kernel_count", "boundary_dofs", "finite_mixed", "finite_oracle",
                                  "finite_reduced", "disc_mixed_oracle", "disc_mixed_reduced", "disc_reduced_oracle",
                                  "imag_residue"});
  double worst = 0.0, worst_imag = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    t.add({fmt(static_cast<int>(i)), fmt(r.l), fmt(r.n2), fmt(r.fm), fmt(r.fo), fmt(r.fr), fmt(r.dmo), fmt(r.dmr), fmt(r.dro),
           fmt(r.imag)});
    worst = std::max({worst, r.dmo, r.dmr, r.dro});
    worst_imag = std::max(worst_imag, r.imag);
  }
  Table& sum = rep.table("summary", {"max_discrepancy", "max_imag_residue", "tolerance"});
  sum.add({fmt(worst), fmt(worst_imag), fmt(tol)});
  if (worst > tol) rep.breaches.push_back("route discrepancy " + fmt(worst) + " > " + fmt(tol));
  if (worst_imag > 1e-10) rep.breaches.push_back("imaginary residue " + fmt(worst_imag) + " > 1e-10");
  rep.seconds = since(t0);
  return rep;
}

StudyReport run_command(const std::string& command, const RunConfig& cfg, int jobs)
{
  if (command == "solve") return cmd_solve(cfg, jobs);
  if (command == "study-eig-decay") return cmd_study_eig_decay(cfg, jobs);
  if (command == "study-global") return cmd_study_global(cfg, jobs);
  if (command == "caccioppoli") return cmd_caccioppoli(cfg, jobs);
  if (command == "green-rank") return cmd_green_rank(cfg, jobs);
  if (command == "oracle-check") return cmd_oracle_check(cfg, jobs);
  throw Error(ErrorCode::Config, "unknown command '" + command + "'");
}

}  // namespace msgfem
