#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aimlake/scenario.hpp"

namespace aimlake {

struct RunOptions {
  std::string basis_cache;             ///< default: <out>/basis_cache
  int workers = 0;                     ///< 0: AIM_LAKE_WORKERS or hardware
  bool paper_literal = false;
  std::optional<std::uint64_t> seed;   ///< overrides the scenario seed
  std::string out_dir;                 ///< default: scenario output / name
};

/// One measured-vs-bound line. Hypothesis checks are flagged in the report
/// but never turn the exit code into an audit failure.
struct Check {
  std::string stage;
  std::string name;
  double measured = 0;
  double bound = 0;
  bool pass = false;
  bool hypothesis = false;
  std::string note;
};

enum ExitCode { kExitPass = 0, kExitAuditFailure = 1, kExitConfigError = 2, kExitRuntimeFailure = 3 };

class Runner {
 public:
  Runner(Scenario scenario, RunOptions options);

  /// basis | simulate | aim | decay | audit | all. Returns 0 or 1; module
  /// errors propagate as Error (StageFailure wraps them with the stage name).
  int run(const std::string& subcommand);

  const std::string& out_dir() const { return out_; }
  const std::vector<Check>& checks() const { return checks_; }

 private:
  Scenario sc_;
  RunOptions opt_;
  std::string out_;
  std::string cache_;
  std::vector<Check> checks_;

  void stage_basis();
  void stage_simulate();
  void stage_aim();
  void stage_decay();
  void stage_audit();
  void timed(const std::string& name, void (Runner::*fn)());
  void record_stage(const std::string& name, double seconds);
  void write_checks(const std::string& stage);
  std::vector<Check> read_checks(const std::string& stage) const;
  bool has_artifact(const std::string& file) const;
  std::string path(const std::string& file) const;
};

/// Full CLI entry; maps errors to exit codes and prints them to stderr.
int run_cli(int argc, char** argv);

}  // namespace aimlake
