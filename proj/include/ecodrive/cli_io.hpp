#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ecodrive/errors.hpp"
#include "ecodrive/fleet_solver.hpp"
#include "ecodrive/sim_oracle.hpp"

namespace ecodrive {

/// Unreadable file or malformed document. Maps to exit status 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemFile {
  FleetProblem problem;
  SolverOptions solver;
};

bool operator==(const ProblemFile& a, const ProblemFile& b);

/// Parses and validates a problem document. Unknown keys are rejected.
ProblemFile parse_problem(const std::string& text);
std::string serialize_problem(const ProblemFile& file);
ProblemFile load_problem(const std::filesystem::path& path);

/// Solution summary laid out like the result tables: per-train speeds, transition
/// speeds, energies (per unit mass and mass-scaled), costs, weights and solver log.
nlohmann::json summary_json(const FleetProblem& problem, const FleetSolution& solution,
                            const std::optional<FleetSolution>& unconstrained = std::nullopt);

/// Columns t, v, x, phase, u_a, u_b.
void write_profile_csv(std::ostream& os, const TrainParams& p, const SpeedProfile& profile,
                       double stride = 1.0);
/// Columns t, x, v, u_a, u_b, phase.
void write_sim_csv(std::ostream& os, const SimResult& sim);

/// Exit statuses of the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,
  kExitNonConvergence = 2,
  kExitInfeasible = 3,
  kExitVerifyFailed = 4,
};

int exit_code_for(ErrorCode code);

struct SolveArgs {
  std::filesystem::path problem;
  std::filesystem::path out_dir = "out";
  bool simulate = false;
  std::optional<double> tol_x;
  std::optional<double> tol_e;
  std::optional<int> max_iter;
  double stride = 1.0;
};

struct SweepArgs {
  std::filesystem::path problem;
  std::filesystem::path out_dir = "out";
  std::size_t interval = 1;
  std::vector<double> caps;
  double stride = 1.0;
};

struct EtaArgs {
  std::filesystem::path problem;
  std::filesystem::path out_dir = "out";
  std::size_t train = 0;
  int samples = 400;
};

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_eta(const EtaArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv (subcommands solve, sweep, eta) and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ecodrive
