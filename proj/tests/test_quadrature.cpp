#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rmtfid/quadrature.hpp"

using namespace rmtfid;

namespace {

constexpr double kPi = std::numbers::pi;

// Midpoint rule on the (u, theta) square with v = u sin(theta), written
// independently of the library substitutions.
double midpoint_grid_oracle(double tau, int m) {
  const double du = tau / m;
  const double dth = 0.5 * kPi / m;
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) * du;
    double row = 0.0;
    for (int j = 0; j < m; ++j) {
      const double st = std::sin((j + 0.5) * dth);
      const double v = u * st;
      row += u * st / std::sqrt((u + 1.0) * (u + 1.0) - v * v);
    }
    sum += row;
  }
  return sum * du * dth;
}

}  // namespace

TEST_CASE("constant integrand") {
  const auto r = integrate_1d([](double) { return 1.0; }, 0.0, 1.0, {}, {});
  CHECK(r.converged);
  CHECK(std::abs(r.value - 1.0) <= 1e-12);
}

TEST_CASE("arcsine integral with a right singular end") {
  QuadratureConfig q;
  const auto r = integrate_1d([](double x) { return 1.0 / std::sqrt(1.0 - x * x); }, 0.0, 1.0,
                              {false, true}, q);
  CHECK(r.converged);
  CHECK(std::abs(r.value - kPi / 2) <= q.rel_tol * kPi / 2);
}

TEST_CASE("logarithm on the unit interval") {
  QuadratureConfig q;
  const auto r = integrate_1d([](double x) { return std::log(x); }, 0.0, 1.0, {}, q);
  CHECK(r.converged);
  CHECK(std::abs(r.value + 1.0) <= q.rel_tol);
}

TEST_CASE("left and two-sided singular substitutions") {
  QuadratureConfig q;
  const auto left = integrate_1d([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 4.0,
                                 {true, false}, q);
  CHECK(std::abs(left.value - 4.0) <= 4.0 * q.rel_tol);
  const auto both = integrate_1d([](double x) { return 1.0 / std::sqrt((x - 1.0) * (3.0 - x)); },
                                 1.0, 3.0, {true, true}, q);
  CHECK(std::abs(both.value - kPi) <= kPi * q.rel_tol);
  CHECK(left.converged);
  CHECK(both.converged);
}

TEST_CASE("panel rule exactness at depth zero") {
  for (int nodes : {15, 21, 31, 41, 51, 61}) {
    CAPTURE(nodes);
    const int gauss_deg = nodes - 2;           // 2 * ((nodes - 1) / 2) - 1
    const int kronrod_deg = 3 * (nodes / 2) + 1;
    const auto pk = gauss_kronrod_panel([&](double x) { return std::pow(x, kronrod_deg); }, 0.0,
                                        1.0, nodes);
    CHECK(pk.kronrod == doctest::Approx(1.0 / (kronrod_deg + 1)).epsilon(1e-13));
    const auto pg = gauss_kronrod_panel([&](double x) { return std::pow(x, gauss_deg); }, 0.0,
                                        1.0, nodes);
    CHECK(pg.gauss == doctest::Approx(1.0 / (gauss_deg + 1)).epsilon(1e-13));
  }
  // A polynomial both rules integrate exactly needs no refinement.
  QuadratureConfig q;
  const auto r = integrate_1d([](double x) { return 3 * x * x * x * x - x + 2; }, -1.0, 2.0, {}, q);
  CHECK(r.evaluations == 15);
  CHECK(r.value == doctest::Approx(3.0 * 33.0 / 5.0 - 1.5 + 6.0).epsilon(1e-14));
}

TEST_CASE("halving rel_tol never increases the reported error") {
  const std::function<double(double)> corpus[] = {
      [](double x) { return std::log(x); },
      [](double x) { return std::exp(-x) * std::cos(5 * x); },
      [](double x) { return 1.0 / (1e-3 + x * x); },
      [](double x) { return std::sqrt(x); },
  };
  for (const auto& f : corpus) {
    double previous = INFINITY;
    for (double tol = 1e-4; tol >= 1e-11; tol *= 0.5) {
      QuadratureConfig q;
      q.rel_tol = tol;
      const auto r = integrate_1d(f, 0.0, 1.0, {}, q);
      CHECK(r.error <= previous);
      previous = r.error;
    }
  }
}

TEST_CASE("error estimate bounds the true error on a test corpus") {
  struct Item {
    std::function<double(double)> f;
    double a, b, exact;
  };
  const Item items[] = {
      {[](double x) { return std::exp(x); }, 0.0, 1.0, std::exp(1.0) - 1.0},
      {[](double x) { return std::log(x); }, 0.0, 1.0, -1.0},
      {[](double x) { return std::sqrt(x); }, 0.0, 1.0, 2.0 / 3.0},
      {[](double x) { return 1.0 / (1.0 + 25 * x * x); }, -1.0, 1.0, 0.4 * std::atan(5.0)},
      {[](double x) { return std::sin(20 * x); }, 0.0, kPi, 0.0},
      {[](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 0.045 + 0.245},
      {[](double x) { return x * x * std::log(x); }, 0.0, 1.0, -1.0 / 9.0},
      {[](double x) { return std::pow(x, -0.25); }, 0.0, 1.0, 4.0 / 3.0},
  };
  int bounded = 0;
  int total = 0;
  for (double tol : {1e-4, 1e-6, 1e-8}) {
    for (const auto& it : items) {
      QuadratureConfig q;
      q.rel_tol = tol;
      const auto r = integrate_1d(it.f, it.a, it.b, {}, q);
      ++total;
      const double roundoff = 100 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(it.exact));
      bounded += std::abs(r.value - it.exact) <= r.error + roundoff ? 1 : 0;
    }
  }
  CHECK(bounded >= 0.95 * total);
}

TEST_CASE("non-convergence is reported with a best estimate") {
  QuadratureConfig q;
  q.max_depth = 8;
  const auto r = integrate_1d([](double x) { return 1.0 / x; }, 0.0, 1.0, {}, q);
  CHECK_FALSE(r.converged);
  CHECK(std::isfinite(r.value));
  CHECK(r.value > 0.0);
}

TEST_CASE("non-finite integrand values are rejected") {
  CHECK_THROWS_AS(integrate_1d([](double) { return NAN; }, 0.0, 1.0, {}, {}), std::domain_error);
}

TEST_CASE("configuration validation") {
  QuadratureConfig q;
  q.rel_tol = 0.0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  q = {};
  q.max_depth = 0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  q = {};
  q.nodes_per_panel = 17;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  CHECK_THROWS_AS(integrate_1d([](double) { return 1.0; }, 1.0, 1.0, {}, {}),
                  std::invalid_argument);
}

TEST_CASE("integrate_2d on the unit square") {
  const auto r = integrate_2d([](double, double) { return 1.0; }, 0.0, 1.0,
                              [](double) { return std::pair{0.0, 1.0}; }, {}, {}, {});
  CHECK(r.converged);
  CHECK(std::abs(r.value - 1.0) <= 1e-12);
}

TEST_CASE("integrate_2d with a singular inner edge") {
  QuadratureConfig q;
  const auto r = integrate_2d([](double u, double v) { return 1.0 / std::sqrt(u * u - v * v); },
                              0.0, 1.0, [](double u) { return std::pair{0.0, u}; }, {},
                              {false, true}, q);
  CHECK(r.converged);
  CHECK(std::abs(r.value - kPi / 2) <= q.rel_tol * kPi / 2);
}

TEST_CASE("integrate_2d against a 4000x4000 midpoint grid") {
  const double tau = 0.5;
  const double oracle = midpoint_grid_oracle(tau, 4000);
  const auto r = integrate_2d(
      [](double u, double v) { return v / std::sqrt((u * u - v * v) * ((u + 1) * (u + 1) - v * v)); },
      0.0, tau, [](double u) { return std::pair{0.0, u}; }, {}, {false, true}, {});
  CHECK(r.converged);
  CHECK(std::abs(r.value - oracle) <= 1e-6 * std::abs(oracle));
}

TEST_CASE("singular outer ends in integrate_2d") {
  QuadratureConfig q;
  // int_0^1 du / sqrt(1-u) int_0^1 dv = 2
  const auto r = integrate_2d([](double u, double) { return 1.0 / std::sqrt(1.0 - u); }, 0.0, 1.0,
                              [](double) { return std::pair{0.0, 1.0}; }, {false, true}, {}, q);
  CHECK(std::abs(r.value - 2.0) <= 2.0 * q.rel_tol);
}
