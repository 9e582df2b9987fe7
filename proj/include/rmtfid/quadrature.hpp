#pragma once

#include <cstddef>
#include <functional>
#include <utility>

namespace rmtfid {

struct QuadratureConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  int max_depth = 30;
  /// Kronrod points per panel: one of 15, 21, 31, 41, 51, 61.
  int nodes_per_panel = 15;

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;

  friend bool operator==(const QuadratureConfig&, const QuadratureConfig&) = default;
};

/// Endpoints at which the integrand behaves like 1/sqrt(distance).
struct SingularEnds {
  bool left = false;
  bool right = false;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
  std::size_t evaluations = 0;
};

/// A sampled value together with its own absolute uncertainty (used when the
/// integrand is itself an inner integral).
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct PanelRule {
  double kronrod = 0.0;
  double gauss = 0.0;
};

/// Single Gauss-Kronrod panel on [a, b] without refinement.
PanelRule gauss_kronrod_panel(const std::function<double(double)>& f, double a, double b,
                              int nodes_per_panel = 15);

/// Globally adaptive Gauss-Kronrod on [a, b]. The panel with the largest error
/// is bisected until the summed error meets max(abs_tol, rel_tol |value|), a
/// panel reaches max_depth, or no panel can improve. The final sum runs over
/// panels in position order.
///
/// Throws std::domain_error if the integrand returns a non-finite value.
QuadratureResult integrate_adaptive(const std::function<Estimate(double)>& g, double a,
                                    double b, const QuadratureConfig& cfg);

/// Integral of f over [a, b]. Flagged ends are mapped away by a cosine
/// substitution so that 1/sqrt endpoint behaviour becomes bounded.
QuadratureResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                              SingularEnds ends, const QuadratureConfig& cfg);

using InnerBounds = std::function<std::pair<double, double>(double)>;

/// Iterated integral  int_a^b du int_{lo(u)}^{hi(u)} dv f(u, v).
///
/// Inner integrals run at a quarter of the outer tolerances and their error
/// estimates are carried into the outer sum.
QuadratureResult integrate_2d(const std::function<double(double, double)>& f, double a, double b,
                              const InnerBounds& inner_bounds, SingularEnds outer_ends,
                              SingularEnds inner_ends, const QuadratureConfig& cfg);

}  // namespace rmtfid
