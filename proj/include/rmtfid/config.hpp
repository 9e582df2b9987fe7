#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmtfid/quadrature.hpp"
#include "rmtfid/spectral.hpp"
#include "rmtfid/strengths.hpp"

namespace rmtfid {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Analytic, Simulate, Compare, Selftest };

std::string to_string(Command c);
Command parse_command(const std::string& text);

/// Run configuration read from an INI-style file:
///
///   [common]      case, strengths | lambda + ratios, tau_start, tau_stop,
///                 tau_count | tau_values, master_seed, out_dir, plot
///   [quadrature]  rel_tol, abs_tol, max_depth, nodes_per_panel
///   [simulate]    n, realizations, probes, connected, window, window_width, threads
///   [analytic]    plot_observable (fidelity | cross_ff)
///   [compare]     reference_case
///   [selftest]    draws
///
/// `strengths` is a ';'-separated list of "lpar,lperp" pairs. `ratios` lists
/// lpar^2/lperp^2 values (inf allowed) applied at fixed `lambda`.
struct RunConfig {
  SymmetryCase symmetry_case = SymmetryCase::I;
  std::vector<PerturbationStrengths> strengths;
  std::optional<double> lambda;
  std::vector<double> ratios;

  double tau_start = 0.1;
  double tau_stop = 2.0;
  int tau_count = 20;
  std::vector<double> tau_values;

  std::uint64_t master_seed = 1;
  std::string out_dir = "out";
  bool plot = false;

  QuadratureConfig quad;

  int n = 200;
  int realizations = 1000;
  int probes = 50;
  bool connected = true;
  SpectralWindow window;
  int threads = 0;

  std::string plot_observable = "fidelity";
  std::optional<SymmetryCase> reference_case;
  std::size_t draws = 100000;

  /// Explicit pairs followed by the lambda/ratio expansion.
  std::vector<PerturbationStrengths> resolved_strengths() const;
  std::vector<double> tau_grid() const;
  /// Throws ConfigError.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&);
};

/// Throws ConfigError on malformed input or unknown keys.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Lossless: parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

}  // namespace rmtfid
