#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtfid/ensembles.hpp"
#include "rmtfid/strengths.hpp"

namespace rmtfid {

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd eigenvectors; // columns
};

class EigenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigendecomposition of a Hermitian matrix. Real input takes the real
/// symmetric solver. Throws std::invalid_argument if max|m - m^dagger| exceeds
/// 1e-10 max(1, max|m|), and EigenError if the solver does not converge.
SpectralDecomposition hermitian_eig(const Eigen::MatrixXcd& m);

/// Ascending eigenvalues only.
Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m);

/// Per-level weights applied to the traces. The Gaussian window is centred at
/// E = 0 with the given width in energy units; the full trace uses unit weights.
struct SpectralWindow {
  enum class Kind { FullTrace, Gaussian };
  Kind kind = Kind::Gaussian;
  /// Width in units of the calibrated mean spacing. Zero selects n/16.
  double width_levels = 0.0;

  std::string describe() const;
};

/// Precomputed data of one (H0, H) pair for evaluation at many times.
class RealizationPair {
 public:
  RealizationPair(const SpectralDecomposition& d0, const SpectralDecomposition& d,
                  bool identical = false);

  /// Weighted fidelity sum_k w0_k e^{-i t E0_k} sum_m |<k|m>|^2 e^{i t E_m} / sum w0.
  /// With no weights this is (1/dim) tr e^{itH} e^{-itH0}.
  std::complex<double> fidelity(double t) const;
  /// sum_m w_m e^{i t E_m}
  std::complex<double> trace_perturbed(double t) const;
  /// sum_k w0_k e^{-i t E0_k}
  std::complex<double> trace_background(double t) const;

  /// Replaces unit weights by exp(-E^2 / (2 sigma^2)).
  void apply_gaussian_window(double sigma);

  double weight_sum_background() const { return w0_.sum(); }
  double weight_norm_background() const { return std::sqrt(w0_.squaredNorm()); }
  double weight_norm_perturbed() const { return std::sqrt(w_.squaredNorm()); }
  Eigen::Index dim() const { return e0_.size(); }

 private:
  Eigen::VectorXd e0_;
  Eigen::VectorXd e_;
  Eigen::VectorXd w0_;
  Eigen::VectorXd w_;
  Eigen::MatrixXd overlap_;  // |<k|m>|^2, rows background levels
  bool identical_ = false;
};

/// (1/dim) tr[exp(itH) exp(-itH0)].
std::complex<double> fidelity_realization(const Eigen::MatrixXcd& h0, const Eigen::MatrixXcd& h,
                                          double t);
std::complex<double> fidelity_realization(const EnsembleMatrix& h0, const EnsembleMatrix& h,
                                          double t);

/// (1/dim) tr[exp(itH)] tr[exp(-itH0)].
std::complex<double> cross_ff_realization(const Eigen::MatrixXcd& h0, const Eigen::MatrixXcd& h,
                                          double t);
std::complex<double> cross_ff_realization(const EnsembleMatrix& h0, const EnsembleMatrix& h,
                                          double t);

/// Mean spacing of distinct levels in the central quarter of each spectrum,
/// averaged over the matrices. With `kramers_pairs` every second level is used.
double estimate_mean_spacing(const std::vector<Eigen::MatrixXcd>& matrices, bool kramers_pairs);

/// Mean level spacing of `probes` background samples drawn from streams
/// seed.stream_index + p.
double calibrate_mean_spacing(SymmetryCase c, int n, int probes, SeedSpec seed);

/// Stream offset used for calibration probes so they never coincide with
/// realization streams.
inline constexpr std::uint64_t kCalibrationStreamBase = std::uint64_t{1} << 62;

struct CurvePoint {
  double tau = 0.0;
  std::complex<double> value;
  double std_error = 0.0;     // real part
  double std_error_im = 0.0;  // imaginary part
};

struct McConfig {
  SymmetryCase symmetry_case = SymmetryCase::I;
  int n = 200;
  int realizations = 1000;
  PerturbationStrengths strengths;
  std::vector<double> tau_grid;
  std::uint64_t master_seed = 1;
  bool connected_subtraction = true;
  SpectralWindow window;
  int probes = 50;
  /// Worker threads, 0 = hardware concurrency.
  int threads = 0;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct McResult {
  std::vector<CurvePoint> fidelity;
  /// Connected or full, following McConfig::connected_subtraction.
  std::vector<CurvePoint> cross_ff;
  std::vector<CurvePoint> cross_ff_full;
  std::vector<CurvePoint> cross_ff_connected;
  double mean_spacing = 1.0;
  /// Factor applied to the cross form-factor traces: 1 for case I and 1/2 for
  /// case II, i.e. normalisation per distinct (Kramers) level.
  double cross_ff_scale = 1.0;
  std::string window;
};

class McError : public std::runtime_error {
 public:
  McError(int realization, const std::string& what)
      : std::runtime_error("realization " + std::to_string(realization) + ": " + what),
        realization_(realization) {}
  int realization() const { return realization_; }

 private:
  int realization_;
};

/// Ensemble averages of fidelity and cross form-factor at t = 2 pi tau / D.
/// Realization r uses SeedSpec{master_seed, r}; results are reduced in
/// realization order so they do not depend on the thread count.
McResult mc_curves(const McConfig& cfg);

}  // namespace rmtfid
