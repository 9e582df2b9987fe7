#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace rmtfid {

enum class SymmetryCase {
  I,   // GOE background, B-type perpendicular part (even spin)
  II,  // GSE background, C-type perpendicular part (odd spin)
};

/// Dyson index of the unperturbed background.
constexpr int beta_of(SymmetryCase c) { return c == SymmetryCase::I ? 1 : 4; }

std::string to_string(SymmetryCase c);
SymmetryCase parse_symmetry_case(const std::string& text);

/// Perturbation strengths in units of the mean level spacing.
class PerturbationStrengths {
 public:
  PerturbationStrengths() = default;
  PerturbationStrengths(double lambda_par, double lambda_perp)
      : lambda_par_(lambda_par), lambda_perp_(lambda_perp) {
    if (!(lambda_par >= 0.0) || !(lambda_perp >= 0.0)) {
      throw std::invalid_argument("perturbation strengths must be non-negative");
    }
  }

  double lambda_par() const { return lambda_par_; }
  double lambda_perp() const { return lambda_perp_; }
  double lambda_sq() const { return lambda_par_ * lambda_par_ + lambda_perp_ * lambda_perp_; }
  /// Fermi golden rule width 2 pi lambda^2 D with D = 1.
  double spreading_width() const { return 2.0 * std::numbers::pi * lambda_sq(); }

  /// Strengths with overall lambda and ratio lambda_par^2 / lambda_perp^2
  /// (ratio = +inf gives a purely parallel perturbation).
  static PerturbationStrengths from_ratio(double lambda, double ratio);

  friend bool operator==(const PerturbationStrengths&, const PerturbationStrengths&) = default;

 private:
  double lambda_par_ = 0.0;
  double lambda_perp_ = 0.0;
};

}  // namespace rmtfid
