#pragma once

/** @file studies.hpp
    @brief Pipeline assembly from a RunConfig and the CLI study commands.
*/

#include "msgfem/config.hpp"
#include "msgfem/globalsolve.hpp"
#include "msgfem/greenrank.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <future>

namespace msgfem {

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

struct StudyReport {
  std::string command;
  std::string config_hash;
  double seconds = 0.0;
  std::vector<Table> tables;
  std::vector<std::string> breaches;  // asserted invariants that failed

  Table& table(const std::string& name, std::vector<std::string> header);
  const Table* find(const std::string& name) const;
  /// The '# timing' line is the only part that varies between identical runs.
  std::string csv(bool with_timing = true) const;
};

std::string fmt(double v);
std::string fmt(int v);
std::string fmt(Index v);

/// Runs fn(0..count-1) on up to jobs threads. Errors are rethrown for the
/// lowest failing index so the outcome does not depend on scheduling.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

ProblemDef make_problem(const RunConfig& cfg, const Mesh2D& mesh);

struct Pipeline {
  Mesh2D mesh;
  ProblemDef problem;
  Cover cover;
  std::vector<LocalProblem> locals;
  std::vector<CVec> particulars;
  std::vector<LocalBasis> bases;
  CVec u_h;
};

/// mesh, cover, local problems, particular functions, spectra and the fine reference.
Pipeline build_pipeline(const RunConfig& cfg, int jobs);

struct SolveOutcome {
  std::vector<int> dims;
  GlobalSolution solution;
};

SolveOutcome solve_with_dims(const Pipeline& pipe, const std::vector<int>& dims);

StudyReport cmd_solve(const RunConfig& cfg, int jobs);
StudyReport cmd_study_eig_decay(const RunConfig& cfg, int jobs);
StudyReport cmd_study_global(const RunConfig& cfg, int jobs);
StudyReport cmd_caccioppoli(const RunConfig& cfg, int jobs);
StudyReport cmd_green_rank(const RunConfig& cfg, int jobs);
StudyReport cmd_oracle_check(const RunConfig& cfg, int jobs);

/// Dispatch by CLI command name; throws Config for unknown names.
StudyReport run_command(const std::string& command, const RunConfig& cfg, int jobs);

}  // namespace msgfem
