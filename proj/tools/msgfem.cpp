#include "msgfem/studies.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int exit_code(msgfem::ErrorCode code)
{
  switch (code) {
    case msgfem::ErrorCode::Config:
    case msgfem::ErrorCode::RouteNotApplicable:
      return 2;
    case msgfem::ErrorCode::InvariantBreach:
      return 4;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Multiscale spectral generalized finite element laboratory"};
  app.require_subcommand(1, 1);
  std::string config_path, out_path;
  int jobs = 1;
  const char* commands[] = {"solve", "study-eig-decay", "study-global", "caccioppoli", "green-rank", "oracle-check"};
  for (const char* name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_path, "CSV report path, overrides output.path");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const msgfem::RunConfig cfg = msgfem::RunConfig::load(config_path);
    const msgfem::StudyReport rep = msgfem::run_command(command, cfg, jobs);
    const std::string path = out_path.empty() ? cfg.str("output.path", "") : out_path;
    const std::string text = rep.csv();
    if (path.empty()) {
      std::cout << text;
    } else {
      std::ofstream os(path);
      if (!os) throw msgfem::Error(msgfem::ErrorCode::Config, "cannot write " + path);
      os << text;
    }
    for (const auto& b : rep.breaches) std::cerr << "invariant breach: " << b << "\n";
    return rep.breaches.empty() ? 0 : 4;
  } catch (const msgfem::Error& e) {
    std::cerr << "error [" << msgfem::to_string(e.code()) << "]";
    if (e.subdomain()) std::cerr << " subdomain " << *e.subdomain();
    std::cerr << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
