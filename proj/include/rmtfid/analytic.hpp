#pragma once

#include <stdexcept>
#include <string>

#include "rmtfid/quadrature.hpp"
#include "rmtfid/strengths.hpp"

namespace rmtfid {

/// Squared strengths. Only lpar^2 and lperp^2 enter the integrals, so this is
/// what the kernels consume; it also admits signed inputs.
struct SquaredStrengths {
  double par_sq = 0.0;
  double perp_sq = 0.0;

  static SquaredStrengths from(const PerturbationStrengths& s) {
    return {s.lambda_par() * s.lambda_par(), s.lambda_perp() * s.lambda_perp()};
  }
  static SquaredStrengths from_signed(double lambda_par, double lambda_perp) {
    return {lambda_par * lambda_par, lambda_perp * lambda_perp};
  }
};

struct AnalyticPoint {
  SymmetryCase symmetry_case = SymmetryCase::I;
  PerturbationStrengths strengths;
  double tau = 0.5;
  QuadratureConfig quad;
};

/// Quadrature did not reach tolerance; carries the best estimate.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double best_estimate, double error_estimate)
      : std::runtime_error(what), best_(best_estimate), error_(error_estimate) {}
  double best_estimate() const { return best_; }
  double error_estimate() const { return error_; }

 private:
  double best_;
  double error_;
};

/// Which integral to evaluate: Z itself or -(1/pi^2) dZ/d(lpar^2).
enum class Observable { Z, Fidelity };

/// Core evaluator shared by the public entry points.
/// Throws std::invalid_argument for tau <= 0 and NonConvergenceError.
double evaluate_integral(SymmetryCase c, SquaredStrengths s, double tau, Observable what,
                         const QuadratureConfig& cfg);

/// Case I double integral over max(0, tau-1) <= u <= tau, 0 <= v <= u.
double z_case1(const PerturbationStrengths& s, double tau, const QuadratureConfig& cfg);
double z_case1(SquaredStrengths s, double tau, const QuadratureConfig& cfg);

/// Case II double integral over max(-1, 1-tau) <= u <= 1, 0 <= v <= 1-|u|.
double z_case2(const PerturbationStrengths& s, double tau, const QuadratureConfig& cfg);
double z_case2(SquaredStrengths s, double tau, const QuadratureConfig& cfg);

/// f = -(1/pi^2) dZ/d(lpar^2), differentiated under the integral sign.
double fidelity_analytic(const AnalyticPoint& p);
double fidelity_analytic(SymmetryCase c, SquaredStrengths s, double tau,
                         const QuadratureConfig& cfg);

/// Cross form-factor (4/beta) tau^2 Z.
double cross_ff_analytic(const AnalyticPoint& p);
double cross_ff_analytic(SymmetryCase c, SquaredStrengths s, double tau,
                         const QuadratureConfig& cfg);

/// f + beta/(4 pi^2 tau^2) dK/d(lpar^2) with the derivative taken by central
/// differences of step h in lpar^2, or a one-sided three-point formula when
/// lpar^2 < h.
double relation_defect(const AnalyticPoint& p, double h);
/// |relation_defect(p, h)|
double relation_residual(const AnalyticPoint& p, double h);

/// Case I integrand in the (l1, l2) variables after the delta constraint
/// l = l1 l2 - 2 tau; zero outside l1, l2 >= 1, |l| <= 1.
double thsa_weight(double l1, double l2, double tau, SquaredStrengths s);

/// Case I integral evaluated in the (l1, l2) variables. The constraint
/// |l1 l2 - 2 tau| <= 1 makes the domain compact, so no truncation is needed.
double z_case1_thsa_oracle(const PerturbationStrengths& s, double tau, const QuadratureConfig& cfg);
double z_case1_thsa_oracle(SquaredStrengths s, double tau, const QuadratureConfig& cfg);

}  // namespace rmtfid
