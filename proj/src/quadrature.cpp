#include "rmtfid/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace rmtfid {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxPanels = 1u << 15;

// Non-negative Kronrod abscissae on [-1, 1] with Kronrod weights and the
// embedded Gauss weights (zero at Kronrod-only nodes).
struct RuleTable {
  std::vector<double> x;
  std::vector<double> wk;
  std::vector<double> wg;
};

template <unsigned N>
RuleTable make_table() {
  using GK = boost::math::quadrature::gauss_kronrod<double, N>;
  using G = boost::math::quadrature::gauss<double, (N - 1) / 2>;
  const auto& xs = GK::abscissa();
  const auto& ws = GK::weights();
  const auto& gw = G::weights();
  RuleTable t;
  t.x.assign(xs.begin(), xs.end());
  t.wk.assign(ws.begin(), ws.end());
  t.wg.assign(xs.size(), 0.0);
  const unsigned gauss_order = (N - 1) / 2;
  const unsigned start = (gauss_order & 1) ? 0 : 1;
  for (unsigned i = start; i < xs.size(); i += 2) t.wg[i] = gw[i / 2];
  return t;
}

const RuleTable& table_for(int nodes) {
  static const RuleTable t15 = make_table<15>();
  static const RuleTable t21 = make_table<21>();
  static const RuleTable t31 = make_table<31>();
  static const RuleTable t41 = make_table<41>();
  static const RuleTable t51 = make_table<51>();
  static const RuleTable t61 = make_table<61>();
  switch (nodes) {
    case 15: return t15;
    case 21: return t21;
    case 31: return t31;
    case 41: return t41;
    case 51: return t51;
    case 61: return t61;
    default: break;
  }
  throw std::invalid_argument("nodes_per_panel must be one of 15, 21, 31, 41, 51, 61");
}

struct Panel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
  // Part of `error` that refinement can reduce (Kronrod-Gauss difference).
  double rule_error = 0.0;
  int depth = 0;
};

void check_finite(double y, double x) {
  if (!std::isfinite(y)) {
    std::ostringstream os;
    os.precision(17);
    os << "non-finite integrand value at x = " << x;
    throw std::domain_error(os.str());
  }
}

Panel evaluate_panel(const std::function<Estimate(double)>& g, const RuleTable& t, double a,
                     double b, int depth, std::size_t& evaluations) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double kron = 0.0;
  double gauss = 0.0;
  double l1 = 0.0;
  double inner = 0.0;
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    if (t.x[i] == 0.0) {
      const Estimate e = g(c);
      check_finite(e.value, c);
      ++evaluations;
      kron += t.wk[i] * e.value;
      gauss += t.wg[i] * e.value;
      l1 += t.wk[i] * std::abs(e.value);
      inner += t.wk[i] * e.error;
      continue;
    }
    const double xp = c + h * t.x[i];
    const double xm = c - h * t.x[i];
    const Estimate ep = g(xp);
    const Estimate em = g(xm);
    check_finite(ep.value, xp);
    check_finite(em.value, xm);
    evaluations += 2;
    kron += t.wk[i] * (ep.value + em.value);
    gauss += t.wg[i] * (ep.value + em.value);
    l1 += t.wk[i] * (std::abs(ep.value) + std::abs(em.value));
    inner += t.wk[i] * (ep.error + em.error);
  }
  Panel p;
  p.a = a;
  p.b = b;
  p.depth = depth;
  p.value = h * kron;
  p.rule_error = std::abs(h * (kron - gauss));
  // Below this the rule difference is rounding noise and splitting cannot help.
  const double noise = 50.0 * std::numeric_limits<double>::epsilon() * std::abs(h) * l1;
  if (p.rule_error < noise) p.rule_error = 0.0;
  p.error = p.rule_error + std::abs(h) * inner;
  return p;
}

bool splittable(const Panel& p, int max_depth) {
  if (p.depth >= max_depth) return false;
  if (p.rule_error == 0.0) return false;
  // Splitting does not reduce inner-integral errors.
  if (p.rule_error < p.error - p.rule_error) return false;
  const double mid = 0.5 * (p.a + p.b);
  return mid > p.a && mid < p.b;
}

}  // namespace

void QuadratureConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw std::invalid_argument("quadrature tolerances must be positive");
  }
  if (max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
  (void)table_for(nodes_per_panel);
}

PanelRule gauss_kronrod_panel(const std::function<double(double)>& f, double a, double b,
                              int nodes_per_panel) {
  const RuleTable& t = table_for(nodes_per_panel);
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  PanelRule r;
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    const double y = t.x[i] == 0.0 ? f(c) : f(c + h * t.x[i]) + f(c - h * t.x[i]);
    r.kronrod += t.wk[i] * y;
    r.gauss += t.wg[i] * y;
  }
  r.kronrod *= h;
  r.gauss *= h;
  return r;
}

QuadratureResult integrate_adaptive(const std::function<Estimate(double)>& g, double a,
                                    double b, const QuadratureConfig& cfg) {
  cfg.validate();
  if (!(a < b)) throw std::invalid_argument("integration interval must satisfy a < b");
  const RuleTable& t = table_for(cfg.nodes_per_panel);

  QuadratureResult r;
  auto by_error = [](const Panel& x, const Panel& y) {
    if (x.error != y.error) return x.error < y.error;
    return x.a > y.a;
  };
  std::priority_queue<Panel, std::vector<Panel>, decltype(by_error)> open(by_error);
  std::vector<Panel> done;

  Panel first = evaluate_panel(g, t, a, b, 0, r.evaluations);
  double total = first.value;
  double total_err = first.error;
  if (splittable(first, cfg.max_depth)) {
    open.push(first);
  } else {
    done.push_back(first);
  }

  auto tolerance = [&](double v) { return std::max(cfg.abs_tol, cfg.rel_tol * std::abs(v)); };

  while (total_err > tolerance(total) && !open.empty() &&
         open.size() + done.size() < kMaxPanels) {
    const Panel p = open.top();
    open.pop();
    const double mid = 0.5 * (p.a + p.b);
    const Panel left = evaluate_panel(g, t, p.a, mid, p.depth + 1, r.evaluations);
    const Panel right = evaluate_panel(g, t, mid, p.b, p.depth + 1, r.evaluations);
    total += (left.value + right.value) - p.value;
    total_err += (left.error + right.error) - p.error;
    for (const Panel& q : {left, right}) {
      if (splittable(q, cfg.max_depth)) {
        open.push(q);
      } else {
        done.push_back(q);
      }
    }
  }

  while (!open.empty()) {
    done.push_back(open.top());
    open.pop();
  }
  std::sort(done.begin(), done.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  r.value = 0.0;
  r.error = 0.0;
  for (const Panel& p : done) {
    r.value += p.value;
    r.error += p.error;
  }
  r.converged = r.error <= tolerance(r.value);
  return r;
}

QuadratureResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                              SingularEnds ends, const QuadratureConfig& cfg) {
  if (!(a < b)) throw std::invalid_argument("integration interval must satisfy a < b");
  const double w = b - a;
  auto plain = [&](double x) { return Estimate{f(x), 0.0}; };
  if (!ends.left && !ends.right) return integrate_adaptive(plain, a, b, cfg);

  if (ends.left && ends.right) {
    // x - a = w sin^2(th/2), b - x = w cos^2(th/2), th in [0, pi]
    auto g = [&](double th) {
      const double s = std::sin(0.5 * th);
      const double c = std::cos(0.5 * th);
      const double x = th < 0.5 * kPi ? a + w * s * s : b - w * c * c;
      return Estimate{f(x) * w * s * c, 0.0};
    };
    return integrate_adaptive(g, 0.0, kPi, cfg);
  }

  // distance to the flagged end is w (1 - cos th) = 2 w sin^2(th/2), th in [0, pi/2]
  const bool left = ends.left;
  auto g = [&, left](double th) {
    const double s = std::sin(0.5 * th);
    const double d = 2.0 * w * s * s;
    const double x = left ? a + d : b - d;
    return Estimate{f(x) * w * std::sin(th), 0.0};
  };
  return integrate_adaptive(g, 0.0, 0.5 * kPi, cfg);
}

QuadratureResult integrate_2d(const std::function<double(double, double)>& f, double a, double b,
                              const InnerBounds& inner_bounds, SingularEnds outer_ends,
                              SingularEnds inner_ends, const QuadratureConfig& cfg) {
  cfg.validate();
  QuadratureConfig inner_cfg = cfg;
  inner_cfg.rel_tol = 0.25 * cfg.rel_tol;
  inner_cfg.abs_tol = 0.25 * cfg.abs_tol / std::max(1.0, b - a);

  std::size_t inner_evals = 0;
  bool inner_ok = true;
  // The outer integrand carries the inner error; singular outer ends are handled
  // by the same substitutions as integrate_1d, so route through a value-only
  // wrapper when needed.
  auto inner = [&](double u) -> Estimate {
    const auto [lo, hi] = inner_bounds(u);
    if (!(hi > lo)) return {0.0, 0.0};
    const QuadratureResult ir =
        integrate_1d([&](double v) { return f(u, v); }, lo, hi, inner_ends, inner_cfg);
    inner_evals += ir.evaluations;
    inner_ok = inner_ok && ir.converged;
    return {ir.value, ir.error};
  };

  QuadratureResult r;
  if (!outer_ends.left && !outer_ends.right) {
    r = integrate_adaptive(inner, a, b, cfg);
  } else {
    const double w = b - a;
    std::function<Estimate(double)> g;
    double lo = 0.0;
    double hi = 0.5 * kPi;
    if (outer_ends.left && outer_ends.right) {
      hi = kPi;
      g = [&](double th) {
        const double s = std::sin(0.5 * th);
        const double c = std::cos(0.5 * th);
        const double u = th < 0.5 * kPi ? a + w * s * s : b - w * c * c;
        const double jac = w * s * c;
        const Estimate e = inner(u);
        return Estimate{e.value * jac, e.error * jac};
      };
    } else {
      const bool left = outer_ends.left;
      g = [&, left](double th) {
        const double s = std::sin(0.5 * th);
        const double d = 2.0 * w * s * s;
        const double u = left ? a + d : b - d;
        const double jac = w * std::sin(th);
        const Estimate e = inner(u);
        return Estimate{e.value * jac, e.error * jac};
      };
    }
    r = integrate_adaptive(g, lo, hi, cfg);
  }
  r.evaluations += inner_evals;
  r.converged = r.converged && inner_ok;
  return r;
}

}  // namespace rmtfid
