#include "rmtfid/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

namespace rmtfid {

namespace {

bool is_real(const Eigen::MatrixXcd& m) { return (m.imag().array() == 0.0).all(); }

void require_hermitian(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument("matrix must be square and non-empty");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (!(hermiticity_defect(m) <= 1e-10 * scale)) {
    throw std::invalid_argument("matrix is not Hermitian");
  }
}

void require_same_dim(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("H0 and H must have equal dimensions");
  }
}

std::complex<double> phase_sum(const Eigen::VectorXd& e, const Eigen::VectorXd& w, double t) {
  double re = 0.0;
  double im = 0.0;
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    re += w[k] * std::cos(t * e[k]);
    im += w[k] * std::sin(t * e[k]);
  }
  return {re, im};
}

double central_spacing(const Eigen::VectorXd& sorted, bool kramers_pairs) {
  std::vector<double> levels;
  const Eigen::Index step = kramers_pairs ? 2 : 1;
  for (Eigen::Index k = 0; k < sorted.size(); k += step) levels.push_back(sorted[k]);
  const auto m = static_cast<Eigen::Index>(levels.size());
  Eigen::Index lo = (3 * m) / 8;
  Eigen::Index hi = (5 * m + 7) / 8 - 1;
  if (hi <= lo) {
    lo = 0;
    hi = m - 1;
  }
  if (hi <= lo) throw std::invalid_argument("too few levels to estimate a spacing");
  return (levels[hi] - levels[lo]) / static_cast<double>(hi - lo);
}

}  // namespace

SpectralDecomposition hermitian_eig(const Eigen::MatrixXcd& m) {
  require_hermitian(m);
  SpectralDecomposition d;
  if (is_real(m)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.real());
    if (es.info() != Eigen::Success) throw EigenError("real symmetric eigensolver failed");
    d.eigenvalues = es.eigenvalues();
    d.eigenvectors = es.eigenvectors().cast<std::complex<double>>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    if (es.info() != Eigen::Success) throw EigenError("Hermitian eigensolver failed");
    d.eigenvalues = es.eigenvalues();
    d.eigenvectors = es.eigenvectors();
  }
  return d;
}

Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m) {
  require_hermitian(m);
  if (is_real(m)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.real(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenError("real symmetric eigensolver failed");
    return es.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenError("Hermitian eigensolver failed");
  return es.eigenvalues();
}

std::string SpectralWindow::describe() const {
  if (kind == Kind::FullTrace) return "full_trace";
  std::ostringstream os;
  os << "gaussian(width_levels=";
  if (width_levels > 0.0) {
    os << width_levels;
  } else {
    os << "n/16";
  }
  os << ")";
  return os.str();
}

RealizationPair::RealizationPair(const SpectralDecomposition& d0, const SpectralDecomposition& d,
                                 bool identical)
    : e0_(d0.eigenvalues),
      e_(d.eigenvalues),
      w0_(Eigen::VectorXd::Ones(d0.eigenvalues.size())),
      w_(Eigen::VectorXd::Ones(d.eigenvalues.size())),
      identical_(identical) {
  if (e0_.size() != e_.size()) throw std::invalid_argument("spectra of unequal size");
  if (!identical_) {
    overlap_ = (d0.eigenvectors.adjoint() * d.eigenvectors).cwiseAbs2();
  }
}

void RealizationPair::apply_gaussian_window(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("window width must be positive");
  const double c = 0.5 / (sigma * sigma);
  w0_ = (-c * e0_.array().square()).exp().matrix();
  w_ = (-c * e_.array().square()).exp().matrix();
}

std::complex<double> RealizationPair::fidelity(double t) const {
  if (identical_ || t == 0.0) return {1.0, 0.0};
  const Eigen::Index n = e_.size();
  Eigen::VectorXd cs(n);
  Eigen::VectorXd sn(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    cs[m] = std::cos(t * e_[m]);
    sn[m] = std::sin(t * e_[m]);
  }
  const Eigen::VectorXd rc = overlap_ * cs;
  const Eigen::VectorXd rs = overlap_ * sn;
  double re = 0.0;
  double im = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double c0 = std::cos(t * e0_[k]);
    const double s0 = std::sin(t * e0_[k]);
    // e^{-i t E0} (rc + i rs)
    re += w0_[k] * (c0 * rc[k] + s0 * rs[k]);
    im += w0_[k] * (c0 * rs[k] - s0 * rc[k]);
  }
  const double norm = w0_.sum();
  return {re / norm, im / norm};
}

std::complex<double> RealizationPair::trace_perturbed(double t) const { return phase_sum(e_, w_, t); }

std::complex<double> RealizationPair::trace_background(double t) const {
  return std::conj(phase_sum(e0_, w0_, t));
}

std::complex<double> fidelity_realization(const Eigen::MatrixXcd& h0, const Eigen::MatrixXcd& h,
                                          double t) {
  require_same_dim(h0, h);
  const bool identical = h0 == h;
  const SpectralDecomposition d0 = hermitian_eig(h0);
  const SpectralDecomposition d = identical ? d0 : hermitian_eig(h);
  return RealizationPair(d0, d, identical).fidelity(t);
}

std::complex<double> fidelity_realization(const EnsembleMatrix& h0, const EnsembleMatrix& h,
                                          double t) {
  return fidelity_realization(h0.entries(), h.entries(), t);
}

std::complex<double> cross_ff_realization(const Eigen::MatrixXcd& h0, const Eigen::MatrixXcd& h,
                                          double t) {
  require_same_dim(h0, h);
  const Eigen::VectorXd e0 = hermitian_eigenvalues(h0);
  const Eigen::VectorXd e = h0 == h ? e0 : hermitian_eigenvalues(h);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(e.size());
  return phase_sum(e, ones, t) * std::conj(phase_sum(e0, ones, t)) /
         static_cast<double>(e.size());
}

std::complex<double> cross_ff_realization(const EnsembleMatrix& h0, const EnsembleMatrix& h,
                                          double t) {
  return cross_ff_realization(h0.entries(), h.entries(), t);
}

double estimate_mean_spacing(const std::vector<Eigen::MatrixXcd>& matrices, bool kramers_pairs) {
  if (matrices.empty()) throw std::invalid_argument("no matrices for spacing estimate");
  double sum = 0.0;
  for (const auto& m : matrices) sum += central_spacing(hermitian_eigenvalues(m), kramers_pairs);
  return sum / static_cast<double>(matrices.size());
}

double calibrate_mean_spacing(SymmetryCase c, int n, int probes, SeedSpec seed) {
  if (probes < 10) throw std::invalid_argument("calibration needs at least 10 probes");
  double sum = 0.0;
  for (int p = 0; p < probes; ++p) {
    const SeedSpec s{seed.master_seed, seed.stream_index + static_cast<std::uint64_t>(p)};
    const EnsembleMatrix h0 = sample_background(c, n, s);
    sum += central_spacing(hermitian_eigenvalues(h0.entries()), c == SymmetryCase::II);
  }
  return sum / probes;
}

void McConfig::validate() const {
  if (realizations < 2) throw std::invalid_argument("realizations must be at least 2");
  if (tau_grid.empty()) throw std::invalid_argument("tau grid is empty");
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > 0.0) || !std::isfinite(tau_grid[i])) {
      throw std::invalid_argument("tau values must be positive and finite");
    }
    if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) {
      throw std::invalid_argument("tau grid must be strictly increasing");
    }
  }
  if (n < 2 || (symmetry_case == SymmetryCase::II && n % 2 != 0)) {
    throw std::invalid_argument("invalid matrix dimension for the symmetry case");
  }
  if (probes < 10) throw std::invalid_argument("probes must be at least 10");
  if (threads < 0) throw std::invalid_argument("threads must be non-negative");
  if (window.kind == SpectralWindow::Kind::Gaussian && window.width_levels < 0.0) {
    throw std::invalid_argument("window width must be non-negative");
  }
}

namespace {

struct RealizationSamples {
  std::vector<std::complex<double>> fidelity;
  std::vector<std::complex<double>> trace;     // normalised tr e^{itH}
  std::vector<std::complex<double>> trace0;    // normalised tr e^{-itH0}
};

RealizationSamples run_realization(const McConfig& cfg, int r, const std::vector<double>& times,
                                   double sigma) {
  const SeedSpec seed{cfg.master_seed, static_cast<std::uint64_t>(r)};
  const EnsembleMatrix h0 = sample_background(cfg.symmetry_case, cfg.n, seed);
  const EnsembleMatrix vpar = sample_parallel(cfg.symmetry_case, cfg.n, seed);
  const EnsembleMatrix vperp = sample_perpendicular(cfg.symmetry_case, cfg.n, seed);
  const EnsembleMatrix h = assemble(h0, vpar, vperp, cfg.strengths);
  const bool identical = h.entries() == h0.entries();
  const SpectralDecomposition d0 = hermitian_eig(h0.entries());
  const SpectralDecomposition d = identical ? d0 : hermitian_eig(h.entries());
  RealizationPair pair(d0, d, identical);
  if (cfg.window.kind == SpectralWindow::Kind::Gaussian) pair.apply_gaussian_window(sigma);
  const double norm = pair.weight_norm_perturbed();
  const double norm0 = pair.weight_norm_background();

  RealizationSamples s;
  for (double t : times) {
    s.fidelity.push_back(pair.fidelity(t));
    s.trace.push_back(pair.trace_perturbed(t) / norm);
    s.trace0.push_back(pair.trace_background(t) / norm0);
  }
  return s;
}

CurvePoint summarize(double tau, const std::vector<std::complex<double>>& xs) {
  const auto count = static_cast<double>(xs.size());
  std::complex<double> mean{0.0, 0.0};
  for (const auto& x : xs) mean += x;
  mean /= count;
  double var_re = 0.0;
  double var_im = 0.0;
  for (const auto& x : xs) {
    var_re += (x.real() - mean.real()) * (x.real() - mean.real());
    var_im += (x.imag() - mean.imag()) * (x.imag() - mean.imag());
  }
  var_re /= count - 1.0;
  var_im /= count - 1.0;
  return {tau, mean, std::sqrt(var_re / count), std::sqrt(var_im / count)};
}

}  // namespace

McResult mc_curves(const McConfig& cfg) {
  cfg.validate();
  McResult out;
  out.mean_spacing = calibrate_mean_spacing(cfg.symmetry_case, cfg.n, cfg.probes,
                                            SeedSpec{cfg.master_seed, kCalibrationStreamBase});
  out.cross_ff_scale = cfg.symmetry_case == SymmetryCase::I ? 1.0 : 0.5;
  out.window = cfg.window.describe();

  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> times;
  for (double tau : cfg.tau_grid) times.push_back(two_pi * tau / out.mean_spacing);
  const double width = cfg.window.width_levels > 0.0 ? cfg.window.width_levels : cfg.n / 16.0;
  const double sigma = width * out.mean_spacing;

  const int total = cfg.realizations;
  std::vector<RealizationSamples> samples(static_cast<std::size_t>(total));
  std::vector<std::string> errors(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (int r = next.fetch_add(1); r < total && !failed.load(); r = next.fetch_add(1)) {
      try {
        samples[static_cast<std::size_t>(r)] = run_realization(cfg, r, times, sigma);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(r)] = e.what();
        failed.store(true);
      }
    }
  };

  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, total);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (int r = 0; r < total; ++r) {
    if (!errors[static_cast<std::size_t>(r)].empty()) {
      throw McError(r, errors[static_cast<std::size_t>(r)]);
    }
  }

  const double kappa = out.cross_ff_scale;
  std::vector<std::complex<double>> column(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double tau = cfg.tau_grid[i];

    for (int r = 0; r < total; ++r) column[r] = samples[r].fidelity[i];
    out.fidelity.push_back(summarize(tau, column));

    std::complex<double> mean_s{0.0, 0.0};
    std::complex<double> mean_s0{0.0, 0.0};
    for (int r = 0; r < total; ++r) {
      mean_s += samples[r].trace[i];
      mean_s0 += samples[r].trace0[i];
    }
    mean_s /= static_cast<double>(total);
    mean_s0 /= static_cast<double>(total);

    for (int r = 0; r < total; ++r) column[r] = kappa * samples[r].trace[i] * samples[r].trace0[i];
    out.cross_ff_full.push_back(summarize(tau, column));

    for (int r = 0; r < total; ++r) {
      column[r] = kappa * (samples[r].trace[i] - mean_s) * (samples[r].trace0[i] - mean_s0);
    }
    out.cross_ff_connected.push_back(summarize(tau, column));
  }
  out.cross_ff = cfg.connected_subtraction ? out.cross_ff_connected : out.cross_ff_full;
  return out;
}

}  // namespace rmtfid
