#include "helpers.hpp"

#include <atomic>

using namespace msgfem;
using namespace testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvariantBreach;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing")
{
  const RunConfig c = RunConfig::parse("# comment\nmesh.n = 12   # trailing\n\nspectral.n_list = 1, 2,3\nstudy.compare_k0 = true\n");
  CHECK(c.integer("mesh.n") == 12);
  CHECK(c.integers("spectral.n_list", {}) == std::vector<int>{1, 2, 3});
  CHECK(c.flag("study.compare_k0", false));
  CHECK(c.num("problem.k", 2.5) == 2.5);
  CHECK(code_of([&] { c.integer("cover.mx"); }) == ErrorCode::Config);
  CHECK(code_of([] { RunConfig::parse("mesh.size = 3\n"); }) == ErrorCode::Config);
  CHECK(code_of([] { RunConfig::parse("mesh.n = 3\nmesh.n = 4\n"); }) == ErrorCode::Config);
  CHECK(code_of([] { RunConfig::parse("mesh.n\n"); }) == ErrorCode::Config);
  CHECK(code_of([] { RunConfig::parse("mesh.n = three\n").integer("mesh.n"); }) == ErrorCode::Config);
  CHECK(code_of([] { RunConfig::load("/nonexistent/run.cfg"); }) == ErrorCode::Config);
}

TEST_CASE("config hash ignores layout")
{
  const RunConfig a = RunConfig::parse("mesh.n = 8\ncover.mx = 2\n");
  const RunConfig b = RunConfig::parse("cover.mx=2\n\n# x\nmesh.n   =   8\n");
  const RunConfig c = RunConfig::parse("mesh.n = 9\ncover.mx = 2\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("problem construction from config")
{
  const Mesh2D m = build_unit_square_mesh(8);
  CHECK(code_of([&] { make_problem(RunConfig::parse("problem.kind = wave\n"), m); }) == ErrorCode::Config);
  CHECK(code_of([&] { make_problem(RunConfig::parse("problem.coefficient = stripes\n"), m); }) == ErrorCode::Config);
  CHECK(code_of([&] { make_problem(RunConfig::parse("problem.kind = convection-diffusion\nproblem.b = 1\n"), m); }) ==
        ErrorCode::Config);
  const ProblemDef h = make_problem(RunConfig::parse("problem.kind = helmholtz\nproblem.k = 3\nproblem.V = 2\n"), m);
  CHECK(h.kind == ProblemKind::Helmholtz);
  CHECK(h.k == 3.0);
  CHECK(h.v_max() == 2.0);
  const ProblemDef r = make_problem(RunConfig::parse("problem.coefficient = random\nproblem.lo = 1\nproblem.hi = 10\nproblem.seed = 4\n"), m);
  CHECK(r.a == make_coefficient(coeff::RandomContrast{1, 10}, m, 4));
}

TEST_CASE("parallel_for covers every index and reports the lowest failure")
{
  std::vector<std::atomic<int>> hits(50);
  parallel_for(50, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  try {
    parallel_for(20, 4, [](int i) {
      if (i % 7 == 3) throw Error(ErrorCode::LocalSolveFailure, "x", i);
    });
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.subdomain() == 3);
  }
}

TEST_CASE("report layout")
{
  StudyReport r;
  r.command = "solve";
  r.config_hash = "abc";
  r.seconds = 1.5;
  r.table("t", {"a", "b"}).add({fmt(1), fmt(0.25)});
  r.table("u", {"c"});
  const std::string csv = r.csv();
  CHECK(csv == "# msgfem solve\n# config_hash: abc\n# timing: seconds=1.5\n\n# table: t\na,b\n1,0.25\n\n# table: u\nc\n");
  CHECK(r.csv(false).find("timing") == std::string::npos);
  CHECK(r.find("u") != nullptr);
  CHECK(r.find("v") == nullptr);
  CHECK(fmt(0.1) == "0.10000000000000001");
}

TEST_CASE("commands are deterministic across job counts")
{
  const RunConfig c = RunConfig::parse("mesh.n = 16\nproblem.coefficient = checkerboard\nproblem.cells = 4\n"
                                       "problem.hi = 100\ncover.mx = 4\ncover.my = 4\nspectral.n_per_subdomain = 4\n");
  const std::string one = run_command("solve", c, 1).csv(false);
  const std::string four = run_command("solve", c, 4).csv(false);
  CHECK(one == four);
  CHECK(one.find("# table: subdomains\nsubdomain_id,n_i,kernel_count,lambda_next\n0,4,0,") != std::string::npos);
  CHECK(code_of([&] { run_command("frobnicate", c, 1); }) == ErrorCode::Config);
}

TEST_CASE("solve requires exactly one dimension rule")
{
  const RunConfig none = RunConfig::parse("mesh.n = 8\ncover.mx = 2\ncover.my = 2\n");
  CHECK(code_of([&] { cmd_solve(none, 1); }) == ErrorCode::Config);
  const RunConfig both = RunConfig::parse("mesh.n = 8\ncover.mx = 2\ncover.my = 2\nspectral.tau = 0.1\nspectral.n_per_subdomain = 2\n");
  CHECK(code_of([&] { cmd_solve(both, 1); }) == ErrorCode::Config);
}

}  // TEST_SUITE
