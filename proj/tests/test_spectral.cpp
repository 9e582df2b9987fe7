#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "rmtfid/ensembles.hpp"
#include "rmtfid/spectral.hpp"

using namespace rmtfid;
using cd = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

// H0 = diag(-1/2, 1/2), H = H0 + g sigma_x diagonalised by hand:
// levels +-r with r = sqrt(1/4 + g^2), and the lower level of H overlaps the
// lower level of H0 with weight c2 = (1 + 1/(2r)) / 2.
struct TwoLevel {
  double g;
  double r() const { return std::sqrt(0.25 + g * g); }
  double c2() const { return 0.5 * (1.0 + 0.5 / r()); }
  double fidelity(double t) const {
    return c2() * std::cos(t * (r() - 0.5)) + (1.0 - c2()) * std::cos(t * (r() + 0.5));
  }
  double cross_ff(double t) const { return 2.0 * std::cos(r() * t) * std::cos(0.5 * t); }
};

Eigen::MatrixXcd two_level_h0() {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 0) = -0.5;
  m(1, 1) = 0.5;
  return m;
}

Eigen::MatrixXcd two_level_h(double g) {
  Eigen::MatrixXcd m = two_level_h0();
  m(0, 1) = g;
  m(1, 0) = g;
  return m;
}

McConfig small_config() {
  McConfig c;
  c.n = 40;
  c.realizations = 200;
  c.tau_grid = {0.2, 0.5, 1.0, 1.5};
  c.master_seed = 2024;
  c.probes = 10;
  c.threads = 1;
  return c;
}

double inf_norm(const Eigen::MatrixXcd& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

TEST_CASE("hermitian_eig examples") {
  SUBCASE("identity") {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(5, 5);
    const auto d = hermitian_eig(id);
    CHECK((d.eigenvalues.array() == 1.0).all());
    const Eigen::MatrixXcd rec =
        d.eigenvectors * d.eigenvalues.asDiagonal() * d.eigenvectors.adjoint();
    CHECK(inf_norm(rec - id) == 0.0);
  }
  SUBCASE("diagonal") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 0) = 2.0;
    m(1, 1) = -1.0;
    const auto d = hermitian_eig(m);
    CHECK(d.eigenvalues[0] == -1.0);
    CHECK(d.eigenvalues[1] == 2.0);
    CHECK(std::abs(d.eigenvectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(d.eigenvectors(0, 1)) == doctest::Approx(1.0));
  }
  SUBCASE("Pauli y") {
    Eigen::MatrixXcd m(2, 2);
    m << cd(0, 0), cd(0, 1), cd(0, -1), cd(0, 0);
    const auto e = hermitian_eigenvalues(m);
    CHECK(e[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(e[1] == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("non-Hermitian input is rejected") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(hermitian_eig(m), std::invalid_argument);
  }
}

TEST_CASE("reconstruction and unitarity on sampled matrices") {
  for (SymmetryCase c : {SymmetryCase::I, SymmetryCase::II}) {
    const SeedSpec s{8, 3};
    const auto h = assemble(sample_background(c, 60, s), sample_parallel(c, 60, s),
                            sample_perpendicular(c, 60, s), {0.4, 0.7});
    const auto d = hermitian_eig(h.entries());
    const Eigen::MatrixXcd& u = d.eigenvectors;
    const Eigen::MatrixXcd rec = u * d.eigenvalues.asDiagonal() * u.adjoint();
    CHECK(inf_norm(h.entries() - rec) <= 1e-10 * inf_norm(h.entries()));
    CHECK(inf_norm(u.adjoint() * u - Eigen::MatrixXcd::Identity(60, 60)) <= 1e-10);
    for (Eigen::Index k = 1; k < d.eigenvalues.size(); ++k) {
      CHECK(d.eigenvalues[k - 1] <= d.eigenvalues[k]);
    }
  }
}

TEST_CASE("fidelity_realization examples") {
  const SeedSpec s{4, 4};
  const auto h0 = sample_background(SymmetryCase::I, 20, s);
  for (double t : {0.0, 0.3, 7.0, 40.0}) {
    const cd f = fidelity_realization(h0, h0, t);
    CHECK(std::abs(f - 1.0) <= 1e-10);
  }
  const auto h = assemble(h0, sample_parallel(SymmetryCase::I, 20, s),
                          sample_perpendicular(SymmetryCase::I, 20, s), {0.5, 0.5});
  CHECK(fidelity_realization(h0, h, 0.0) == cd(1.0, 0.0));

  const TwoLevel oracle{0.1};
  for (double t : {1.0, 2.5, 10.0}) {
    CAPTURE(t);
    const cd f = fidelity_realization(two_level_h0(), two_level_h(0.1), t);
    CHECK(std::abs(f.real() - oracle.fidelity(t)) <= 1e-12);
    CHECK(std::abs(f.imag()) <= 1e-12);
  }
}

TEST_CASE("fidelity modulus is bounded by one") {
  for (SymmetryCase c : {SymmetryCase::I, SymmetryCase::II}) {
    for (int r = 0; r < 5; ++r) {
      const SeedSpec s{31, static_cast<std::uint64_t>(r)};
      const auto h0 = sample_background(c, 24, s);
      const auto h = assemble(h0, sample_parallel(c, 24, s), sample_perpendicular(c, 24, s),
                              {1.0, 0.8});
      for (double t = 0.0; t < 30.0; t += 0.7) {
        CHECK(std::abs(fidelity_realization(h0, h, t)) <= 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("cross_ff_realization examples") {
  const SeedSpec s{4, 5};
  const auto h0 = sample_background(SymmetryCase::I, 12, s);
  const auto h = assemble(h0, sample_parallel(SymmetryCase::I, 12, s),
                          sample_perpendicular(SymmetryCase::I, 12, s), {0.3, 0.3});
  CHECK(std::abs(cross_ff_realization(h0, h, 0.0) - 12.0) <= 1e-12);

  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(1, 1) = kPi;
  CHECK(std::abs(cross_ff_realization(d, d, 1.0)) <= 1e-15);

  const TwoLevel oracle{0.1};
  for (double t : {1.0, 4.0}) {
    const cd k = cross_ff_realization(two_level_h0(), two_level_h(0.1), t);
    CHECK(std::abs(k.real() - oracle.cross_ff(t)) <= 1e-12);
    CHECK(std::abs(k.imag()) <= 1e-12);
  }
}

TEST_CASE("mean spacing calibration") {
  SUBCASE("case I at n = 200") {
    const double d = calibrate_mean_spacing(SymmetryCase::I, 200, 50, {1, kCalibrationStreamBase});
    CHECK(std::abs(d - 1.0) <= 0.05);
  }
  SUBCASE("case II at n = 200") {
    const double d = calibrate_mean_spacing(SymmetryCase::II, 200, 50, {1, kCalibrationStreamBase});
    CHECK(std::abs(d - 1.0) <= 0.10);
  }
  SUBCASE("semicircle cross-check for case II") {
    // Distinct levels 100 on a semicircle of radius R have central density
    // 2 * 100 / (pi R), so D = pi R / 200 with R^2 = 4 * N' * (2 sigma_A^2).
    std::vector<Eigen::MatrixXcd> ms;
    double r2 = 0.0;
    for (int p = 0; p < 20; ++p) {
      const auto m = sample_background(SymmetryCase::II, 200, {9, static_cast<std::uint64_t>(p)});
      const Eigen::VectorXd e = hermitian_eigenvalues(m.entries());
      r2 += e.squaredNorm() / 200.0 * 4.0;  // <E^2> = R^2 / 4 for the semicircle
      ms.push_back(m.entries());
    }
    const double radius = std::sqrt(r2 / 20.0);
    const double semicircle = kPi * radius / 200.0;
    CHECK(estimate_mean_spacing(ms, true) == doctest::Approx(semicircle).epsilon(0.05));
  }
  SUBCASE("scaling") {
    std::vector<Eigen::MatrixXcd> ms, scaled;
    for (int p = 0; p < 10; ++p) {
      ms.push_back(sample_background(SymmetryCase::I, 100, {3, static_cast<std::uint64_t>(p)}).entries());
      scaled.push_back(2.5 * ms.back());
    }
    CHECK(estimate_mean_spacing(scaled, false) ==
          doctest::Approx(2.5 * estimate_mean_spacing(ms, false)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(calibrate_mean_spacing(SymmetryCase::I, 200, 5, {}), std::invalid_argument);
}

TEST_CASE("Kramers splitting by the perpendicular perturbation") {
  auto max_pair_gap = [](double lperp) {
    double gap = 0.0;
    for (int p = 0; p < 5; ++p) {
      const SeedSpec s{17, static_cast<std::uint64_t>(p)};
      const auto h = assemble(sample_background(SymmetryCase::II, 40, s),
                              sample_parallel(SymmetryCase::II, 40, s),
                              sample_perpendicular(SymmetryCase::II, 40, s), {0.3, lperp});
      const Eigen::VectorXd e = hermitian_eigenvalues(h.entries());
      for (Eigen::Index k = 0; k < e.size(); k += 2) gap = std::max(gap, e[k + 1] - e[k]);
    }
    return gap;
  };
  const double closed = max_pair_gap(0.0);
  CHECK(closed <= 1e-8);
  CHECK(max_pair_gap(0.1) > 10.0 * std::max(closed, 1e-12));
}

TEST_CASE("mc_curves at zero strength") {
  for (SymmetryCase c : {SymmetryCase::I, SymmetryCase::II}) {
    McConfig cfg = small_config();
    cfg.symmetry_case = c;
    cfg.realizations = 20;
    const auto r = mc_curves(cfg);
    REQUIRE(r.fidelity.size() == cfg.tau_grid.size());
    for (const auto& p : r.fidelity) {
      CHECK(p.value == cd(1.0, 0.0));
      CHECK(p.std_error == 0.0);
      CHECK(p.std_error_im == 0.0);
    }
  }
}

TEST_CASE("mc_curves is independent of the thread count") {
  McConfig cfg = small_config();
  cfg.strengths = {0.2, 0.3};
  cfg.realizations = 60;
  const auto one = mc_curves(cfg);
  cfg.threads = 3;
  const auto three = mc_curves(cfg);
  REQUIRE(one.fidelity.size() == three.fidelity.size());
  for (std::size_t i = 0; i < one.fidelity.size(); ++i) {
    CHECK(one.fidelity[i].value == three.fidelity[i].value);
    CHECK(one.fidelity[i].std_error == three.fidelity[i].std_error);
    CHECK(one.cross_ff[i].value == three.cross_ff[i].value);
    CHECK(one.cross_ff_full[i].value == three.cross_ff_full[i].value);
  }
  CHECK(one.mean_spacing == three.mean_spacing);
}

TEST_CASE("standard error scales with the realization count") {
  McConfig cfg = small_config();
  cfg.strengths = {0.2, 0.2};
  cfg.tau_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const auto a = mc_curves(cfg);
  cfg.realizations *= 2;
  const auto b = mc_curves(cfg);
  int within = 0;
  for (std::size_t i = 0; i < a.fidelity.size(); ++i) {
    const double ratio = b.fidelity[i].std_error / a.fidelity[i].std_error * std::sqrt(2.0);
    within += ratio >= 0.5 && ratio <= 2.0;
  }
  CHECK(within >= 0.95 * static_cast<double>(a.fidelity.size()));
}

TEST_CASE("imaginary part of the averaged fidelity vanishes") {
  for (auto str : {PerturbationStrengths{0.3, 0.3}, PerturbationStrengths{0.4, 0.0}}) {
    McConfig cfg = small_config();
    cfg.strengths = str;
    const auto r = mc_curves(cfg);
    for (const auto& p : r.fidelity) CHECK(std::abs(p.value.imag()) <= 3.0 * p.std_error_im + 1e-12);
  }
}

TEST_CASE("cross form-factor variants and scale") {
  McConfig cfg = small_config();
  cfg.strengths = {0.1, 0.1};
  cfg.realizations = 40;
  auto r = mc_curves(cfg);
  CHECK(r.cross_ff_scale == 1.0);
  for (std::size_t i = 0; i < r.cross_ff.size(); ++i) {
    CHECK(r.cross_ff[i].value == r.cross_ff_connected[i].value);
  }
  cfg.connected_subtraction = false;
  r = mc_curves(cfg);
  for (std::size_t i = 0; i < r.cross_ff.size(); ++i) {
    CHECK(r.cross_ff[i].value == r.cross_ff_full[i].value);
  }
  cfg.symmetry_case = SymmetryCase::II;
  CHECK(mc_curves(cfg).cross_ff_scale == 0.5);
}

TEST_CASE("McConfig validation") {
  McConfig cfg = small_config();
  cfg.realizations = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.tau_grid = {0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.tau_grid = {};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.symmetry_case = SymmetryCase::II;
  cfg.n = 41;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
