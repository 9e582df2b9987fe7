#include "rmtfid/analytic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace rmtfid {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPi2 = kPi * kPi;

void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
}

void require_strengths(SquaredStrengths s) {
  if (!(s.par_sq >= 0.0) || !(s.perp_sq >= 0.0)) {
    throw std::invalid_argument("squared strengths must be non-negative");
  }
}

[[noreturn]] void fail(const char* what, double tau, const QuadratureResult& r) {
  std::ostringstream os;
  os.precision(6);
  os << what << " did not converge at tau = " << tau << " (estimate " << r.value << ", error "
     << r.error << ")";
  throw NonConvergenceError(os.str(), r.value, r.error);
}

// Case I with u = tau - s^2 and v = u cos(phi). The Jacobian 2s and the
// v dv / sqrt(u^2 - v^2) = u cos(phi) dphi measure are folded in.
double kernel_case1(double s, double phi, double tau, SquaredStrengths str, Observable what) {
  const double u = tau - s * s;
  const double cphi = std::cos(phi);
  const double half = std::sin(0.5 * phi);
  const double v = u * cphi;
  const double tau_minus_v = s * s + 2.0 * u * half * half;
  const double t2v2 = tau_minus_v * (tau + v);
  const double num = s * s * (1.0 - s * s);
  const double sq = std::sqrt((u + 1.0 - v) * (u + 1.0 + v));
  const double pre = 1.0 + 4.0 * kPi2 * str.perp_sq * t2v2;
  const double a = tau * (2.0 * u + 1.0 - tau);
  const double expo = -2.0 * kPi2 * (str.par_sq + str.perp_sq) * a -
                      2.0 * kPi2 * (str.par_sq - str.perp_sq) * v * v;
  double k = 2.0 * s * u * cphi * pre / sq * num / (t2v2 * t2v2) * std::exp(expo);
  if (what == Observable::Fidelity) k *= 2.0 * (a + v * v);
  return k;
}

// Case II with v = c cos(phi), c = 1 - |u|. `u` and `tau_minus_c` are passed
// separately so that tau - c keeps full precision near the corner.
double kernel_case2(double u, double tau_minus_c, double jac, double phi, double tau,
                    SquaredStrengths str, Observable what) {
  const double au = std::abs(u);
  const double c = 1.0 - au;
  const double cphi = std::cos(phi);
  const double half = std::sin(0.5 * phi);
  const double v = c * cphi;
  const double t2v2 = (tau_minus_c + 2.0 * c * half * half) * (tau + v);
  const double d2v2 = (2.0 * au + 2.0 * c * half * half) * (1.0 + au + v);
  const double num = (u + tau - 1.0) * (u + tau + 1.0);
  const double pre = 1.0 - 2.0 * kPi2 * str.perp_sq * t2v2;
  const double a = tau * (2.0 * u + tau);
  const double expo = -kPi2 * (str.par_sq + str.perp_sq) * a +
                      kPi2 * (str.par_sq - str.perp_sq) * v * v;
  double k = jac * c * cphi * num / (t2v2 * t2v2) * pre / std::sqrt(d2v2) * std::exp(expo);
  if (what == Observable::Fidelity) k *= a - v * v;
  return k;
}

QuadratureResult integrate_rect(const std::function<double(double, double)>& f, double s_max,
                                const QuadratureConfig& cfg) {
  const double half_pi = 0.5 * kPi;
  return integrate_2d(f, 0.0, s_max, [half_pi](double) { return std::pair{0.0, half_pi}; }, {},
                      {}, cfg);
}

double case1_integral(SquaredStrengths s, double tau, Observable what, const QuadratureConfig& cfg) {
  const double lower = std::max(0.0, tau - 1.0);
  const double s_max = std::sqrt(tau - lower);
  const auto r = integrate_rect(
      [&](double x, double phi) { return kernel_case1(x, phi, tau, s, what); }, s_max, cfg);
  if (!r.converged) fail("case I integral", tau, r);
  return r.value;
}

double case2_integral(SquaredStrengths s, double tau, Observable what, const QuadratureConfig& cfg) {
  if (tau < 1.0) {
    // u = (1 - tau) + x^2, tau - c = x^2
    const auto r = integrate_rect(
        [&](double x, double phi) {
          return kernel_case2(1.0 - tau + x * x, x * x, 2.0 * x, phi, tau, s, what);
        },
        std::sqrt(tau), cfg);
    if (!r.converged) fail("case II integral", tau, r);
    return r.value;
  }
  // Split at u = 0 where c = 1 - |u| has a kink; u = +-x^2 on each side.
  QuadratureConfig half_cfg = cfg;
  half_cfg.abs_tol = 0.5 * cfg.abs_tol;
  const auto right = integrate_rect(
      [&](double x, double phi) {
        return kernel_case2(x * x, tau - 1.0 + x * x, 2.0 * x, phi, tau, s, what);
      },
      1.0, half_cfg);
  if (!right.converged) fail("case II integral", tau, right);
  const double lower = std::max(-1.0, 1.0 - tau);
  if (lower >= 0.0) return right.value;
  const auto left = integrate_rect(
      [&](double x, double phi) {
        return kernel_case2(-x * x, tau - 1.0 + x * x, 2.0 * x, phi, tau, s, what);
      },
      std::sqrt(-lower), half_cfg);
  if (!left.converged) fail("case II integral", tau, left);
  return right.value + left.value;
}

double beta_factor(SymmetryCase c) { return 4.0 / beta_of(c); }

}  // namespace

double evaluate_integral(SymmetryCase c, SquaredStrengths s, double tau, Observable what,
                         const QuadratureConfig& cfg) {
  require_tau(tau);
  require_strengths(s);
  cfg.validate();
  return c == SymmetryCase::I ? case1_integral(s, tau, what, cfg) : case2_integral(s, tau, what, cfg);
}

double z_case1(SquaredStrengths s, double tau, const QuadratureConfig& cfg) {
  return evaluate_integral(SymmetryCase::I, s, tau, Observable::Z, cfg);
}

double z_case1(const PerturbationStrengths& s, double tau, const QuadratureConfig& cfg) {
  return z_case1(SquaredStrengths::from(s), tau, cfg);
}

double z_case2(SquaredStrengths s, double tau, const QuadratureConfig& cfg) {
  return evaluate_integral(SymmetryCase::II, s, tau, Observable::Z, cfg);
}

double z_case2(const PerturbationStrengths& s, double tau, const QuadratureConfig& cfg) {
  return z_case2(SquaredStrengths::from(s), tau, cfg);
}

double fidelity_analytic(SymmetryCase c, SquaredStrengths s, double tau,
                         const QuadratureConfig& cfg) {
  return evaluate_integral(c, s, tau, Observable::Fidelity, cfg);
}

double fidelity_analytic(const AnalyticPoint& p) {
  return fidelity_analytic(p.symmetry_case, SquaredStrengths::from(p.strengths), p.tau, p.quad);
}

double cross_ff_analytic(SymmetryCase c, SquaredStrengths s, double tau,
                         const QuadratureConfig& cfg) {
  return beta_factor(c) * tau * tau * evaluate_integral(c, s, tau, Observable::Z, cfg);
}

double cross_ff_analytic(const AnalyticPoint& p) {
  return cross_ff_analytic(p.symmetry_case, SquaredStrengths::from(p.strengths), p.tau, p.quad);
}

double relation_defect(const AnalyticPoint& p, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step h must be positive");
  const SquaredStrengths base = SquaredStrengths::from(p.strengths);
  auto k_at = [&](double par_sq) {
    return cross_ff_analytic(p.symmetry_case, {par_sq, base.perp_sq}, p.tau, p.quad);
  };
  double slope = 0.0;
  if (base.par_sq >= h) {
    slope = (k_at(base.par_sq + h) - k_at(base.par_sq - h)) / (2.0 * h);
  } else {
    slope = (-3.0 * k_at(base.par_sq) + 4.0 * k_at(base.par_sq + h) - k_at(base.par_sq + 2.0 * h)) /
            (2.0 * h);
  }
  const double f = fidelity_analytic(p);
  const double scale = beta_of(p.symmetry_case) / (4.0 * kPi2 * p.tau * p.tau);
  return f + scale * slope;
}

double relation_residual(const AnalyticPoint& p, double h) { return std::abs(relation_defect(p, h)); }

double thsa_weight(double l1, double l2, double tau, SquaredStrengths s) {
  require_tau(tau);
  if (!(l1 >= 1.0) || !(l2 >= 1.0)) return 0.0;
  const double p = l1 * l2;
  const double lam = p - 2.0 * tau;
  if (!(std::abs(lam) <= 1.0)) return 0.0;
  const double sum_sq = l1 * l1 + l2 * l2;
  const double d = sum_sq + lam * lam - 2.0 * lam * p - 1.0;
  // parameters of the source variables: x_o^2 = 2 lpar^2, x_u^2 = lperp^2, kappa = 1
  const double xo2 = 2.0 * s.par_sq;
  const double xu2 = s.perp_sq;
  const double w = (p - lam) * (p - lam) * (1.0 - lam * lam) / (d * d) * (1.0 + kPi2 * xu2 * d);
  const double fexp = -0.5 * xu2 * kPi2 * (sum_sq - lam * lam - 1.0) -
                      0.25 * xo2 * kPi2 * (2.0 * p * p - lam * lam - sum_sq + 1.0);
  return w * std::exp(fexp) / (4.0 * tau * tau);
}

double z_case1_thsa_oracle(SquaredStrengths s, double tau, const QuadratureConfig& cfg) {
  require_tau(tau);
  require_strengths(s);
  cfg.validate();
  // p = l1 l2 = 2 tau + 1 - x^2, l1 = sqrt(p) e^{-y}, l2 = sqrt(p) e^{y}; the
  // half y >= 0 is doubled. Then 1 - l^2 = x^2 (2 - x^2), (p - l)^2 = 4 tau^2 and
  // D = 4 p sinh^2 y + x^2 (p + 2 tau - 1).
  const double x_max = std::sqrt(std::min(2.0 * tau, 2.0));
  const double xo2 = 2.0 * s.par_sq;
  const double xu2 = s.perp_sq;
  auto f = [&](double x, double y) {
    const double x2 = x * x;
    const double p = 2.0 * tau + 1.0 - x2;
    const double lam = 1.0 - x2;
    const double sh = std::sinh(y);
    const double d = 4.0 * p * sh * sh + x2 * (p + 2.0 * tau - 1.0);
    const double sum_sq = 2.0 * p + 4.0 * p * sh * sh;
    const double w = x2 * (2.0 - x2) / (d * d) * (1.0 + kPi2 * xu2 * d);
    const double fexp = -0.5 * xu2 * kPi2 * (sum_sq - lam * lam - 1.0) -
                        0.25 * xo2 * kPi2 * (2.0 * p * p - lam * lam - sum_sq + 1.0);
    return 4.0 * x * w * std::exp(fexp);
  };
  auto bounds = [&](double x) {
    return std::pair{0.0, 0.5 * std::log1p(2.0 * tau - x * x)};
  };
  const auto r = integrate_2d(f, 0.0, x_max, bounds, {}, {}, cfg);
  if (!r.converged) fail("case I oracle integral", tau, r);
  return r.value;
}

double z_case1_thsa_oracle(const PerturbationStrengths& s, double tau, const QuadratureConfig& cfg) {
  return z_case1_thsa_oracle(SquaredStrengths::from(s), tau, cfg);
}

}  // namespace rmtfid
