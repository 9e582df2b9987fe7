#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rmtfid/config.hpp"
#include "rmtfid/spectral.hpp"

namespace rmtfid {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitFailure = 4;

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;
  std::string message;
};

struct AnalyticRow {
  SymmetryCase symmetry_case = SymmetryCase::I;
  PerturbationStrengths strengths;
  double tau = 0.0;
  double fidelity = 0.0;
  double cross_ff = 0.0;
  bool fidelity_converged = true;
  bool cross_ff_converged = true;
  /// "ok", or '+'-joined flags: f_nonconverged, k_nonconverged, tau_beyond_2.5.
  std::string status;
};

/// Rows ordered by strengths then tau. Non-convergent values keep the best
/// estimate and are flagged rather than thrown.
std::vector<AnalyticRow> compute_analytic_rows(SymmetryCase c,
                                               const std::vector<PerturbationStrengths>& strengths,
                                               const std::vector<double>& taus,
                                               const QuadratureConfig& quad, int threads);

std::string analytic_csv(const std::vector<AnalyticRow>& rows);

struct SimulateBlock {
  PerturbationStrengths strengths;
  McResult result;
};

std::vector<SimulateBlock> compute_simulate_blocks(const RunConfig& cfg, int threads);
std::string simulate_csv(const RunConfig& cfg, const std::vector<SimulateBlock>& blocks);

/// Each writes its artifacts into cfg.out_dir and returns the exit code.
CommandResult run_analytic(const RunConfig& cfg);
CommandResult run_simulate(const RunConfig& cfg);
CommandResult run_compare(const RunConfig& cfg);
CommandResult run_selftest(const RunConfig& cfg);

/// Dispatches and maps exceptions onto exit codes.
CommandResult run_command(Command cmd, const RunConfig& cfg);

/// Worker count: an explicit command-line value wins, otherwise the config
/// value capped by the environment value (0 = hardware concurrency).
int resolve_threads(std::optional<int> cli_threads, const char* env_value, int config_threads);

}  // namespace rmtfid
