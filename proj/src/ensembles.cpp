#include "rmtfid/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rmtfid {

namespace {

using cd = std::complex<double>;
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

void check_dimension(SymmetryCase c, int n) {
  if (n < 2) throw std::invalid_argument("matrix dimension must be at least 2");
  if (c == SymmetryCase::II && n % 2 != 0) {
    throw std::invalid_argument("case II needs an even complex dimension 2N'");
  }
}

// Scale s of the background: <H_ij H_ji> = s with s = N/pi^2, N the real
// (case I) or quaternion (case II) dimension.
double background_scale(SymmetryCase c, int n) {
  const int N = c == SymmetryCase::I ? n : n / 2;
  return static_cast<double>(N) / kPi2;
}

Eigen::MatrixXcd goe(int n, double s, GaussianStream& rng) {
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = rng.normal(2.0 * s);
    for (int j = i + 1; j < n; ++j) {
      const double x = rng.normal(s);
      m(i, j) = x;
      m(j, i) = x;
    }
  }
  return m;
}

// Hermitian block with real diagonal variance `dvar` and Re/Im off-diagonal variance `ovar`.
Eigen::MatrixXcd hermitian_block(int m, double dvar, double ovar, GaussianStream& rng) {
  Eigen::MatrixXcd a(m, m);
  for (int i = 0; i < m; ++i) {
    a(i, i) = rng.normal(dvar);
    for (int j = i + 1; j < m; ++j) {
      const double re = rng.normal(ovar);
      const double im = rng.normal(ovar);
      a(i, j) = cd(re, im);
      a(j, i) = cd(re, -im);
    }
  }
  return a;
}

Eigen::MatrixXcd gse(int n, double s, GaussianStream& rng) {
  const int h = n / 2;
  const Eigen::MatrixXcd a = hermitian_block(h, s / 2.0, s / 4.0, rng);
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(h, h);
  for (int i = 0; i < h; ++i) {
    for (int j = i + 1; j < h; ++j) {
      const cd z(rng.normal(s / 4.0), rng.normal(s / 4.0));
      b(i, j) = z;
      b(j, i) = -z;
    }
  }
  Eigen::MatrixXcd m(n, n);
  m.topLeftCorner(h, h) = a;
  m.topRightCorner(h, h) = b;
  m.bottomLeftCorner(h, h) = -b.conjugate();
  m.bottomRightCorner(h, h) = a.conjugate();
  return m;
}

Eigen::MatrixXcd btype(int n, GaussianStream& rng) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double x = rng.normal();
      m(i, j) = cd(0.0, x);
      m(j, i) = cd(0.0, -x);
    }
  }
  return m;
}

Eigen::MatrixXcd ctype(int n, GaussianStream& rng) {
  const int h = n / 2;
  const Eigen::MatrixXcd a = hermitian_block(h, 0.5, 0.25, rng);
  Eigen::MatrixXcd b(h, h);
  for (int i = 0; i < h; ++i) {
    b(i, i) = cd(rng.normal(0.5), rng.normal(0.5));
    for (int j = i + 1; j < h; ++j) {
      const cd z(rng.normal(0.25), rng.normal(0.25));
      b(i, j) = z;
      b(j, i) = z;
    }
  }
  Eigen::MatrixXcd m(n, n);
  m.topLeftCorner(h, h) = a;
  m.topRightCorner(h, h) = b;
  m.bottomLeftCorner(h, h) = b.conjugate();
  m.bottomRightCorner(h, h) = -a.conjugate();
  return m;
}

SymmetryCase case_of(EnsembleClass cls) {
  switch (cls) {
    case EnsembleClass::GOE:
    case EnsembleClass::BType:
      return SymmetryCase::I;
    case EnsembleClass::GSE:
    case EnsembleClass::CType:
      return SymmetryCase::II;
    case EnsembleClass::GUE:
      break;
  }
  throw std::invalid_argument("GUE is not tied to a symmetry case");
}

}  // namespace

std::string to_string(EnsembleClass c) {
  switch (c) {
    case EnsembleClass::GOE:
      return "GOE";
    case EnsembleClass::GSE:
      return "GSE";
    case EnsembleClass::BType:
      return "BType";
    case EnsembleClass::CType:
      return "CType";
    case EnsembleClass::GUE:
      return "GUE";
  }
  return "?";
}

EnsembleMatrix::EnsembleMatrix(Eigen::MatrixXcd entries, EnsembleClass cls, SeedSpec seed)
    : entries_(std::move(entries)), class_(cls), seed_(seed) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw std::invalid_argument("ensemble matrix must be square and non-empty");
  }
}

EnsembleMatrix sample_background(SymmetryCase c, int n, SeedSpec seed) {
  check_dimension(c, n);
  GaussianStream rng(seed, kBackgroundSubstream);
  const double s = background_scale(c, n);
  if (c == SymmetryCase::I) return {goe(n, s, rng), EnsembleClass::GOE, seed};
  return {gse(n, s, rng), EnsembleClass::GSE, seed};
}

EnsembleMatrix sample_parallel(SymmetryCase c, int n, SeedSpec seed) {
  check_dimension(c, n);
  GaussianStream rng(seed, kParallelSubstream);
  if (c == SymmetryCase::I) return {goe(n, 1.0, rng), EnsembleClass::GOE, seed};
  return {gse(n, 1.0, rng), EnsembleClass::GSE, seed};
}

EnsembleMatrix sample_perpendicular(SymmetryCase c, int n, SeedSpec seed) {
  check_dimension(c, n);
  GaussianStream rng(seed, kPerpendicularSubstream);
  if (c == SymmetryCase::I) return {btype(n, rng), EnsembleClass::BType, seed};
  return {ctype(n, rng), EnsembleClass::CType, seed};
}

EnsembleMatrix assemble(const EnsembleMatrix& h0, const EnsembleMatrix& vpar,
                        const EnsembleMatrix& vperp, const PerturbationStrengths& strengths) {
  if (h0.dim() != vpar.dim() || h0.dim() != vperp.dim()) {
    throw std::invalid_argument("assemble: dimension mismatch");
  }
  const auto bg = h0.ensemble_class();
  const bool case1 = bg == EnsembleClass::GOE && vpar.ensemble_class() == EnsembleClass::GOE &&
                     vperp.ensemble_class() == EnsembleClass::BType;
  const bool case2 = bg == EnsembleClass::GSE && vpar.ensemble_class() == EnsembleClass::GSE &&
                     vperp.ensemble_class() == EnsembleClass::CType;
  if (!case1 && !case2) {
    throw std::invalid_argument("assemble: ensemble classes " + to_string(bg) + "/" +
                                to_string(vpar.ensemble_class()) + "/" +
                                to_string(vperp.ensemble_class()) +
                                " do not form a symmetry case");
  }
  Eigen::MatrixXcd h = h0.entries();
  if (strengths.lambda_par() != 0.0) h += strengths.lambda_par() * vpar.entries();
  if (strengths.lambda_perp() != 0.0) h += strengths.lambda_perp() * vperp.entries();
  const auto cls = strengths.lambda_perp() == 0.0 ? bg : EnsembleClass::GUE;
  return {std::move(h), cls, h0.seed_record()};
}

bool is_real_symmetric(const Eigen::MatrixXcd& m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (m(i, j).imag() != 0.0 || m(i, j).real() != m(j, i).real()) return false;
    }
  }
  return true;
}

bool is_imaginary_antisymmetric(const Eigen::MatrixXcd& m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (m(i, j).real() != 0.0 || m(i, j).imag() != -m(j, i).imag()) return false;
    }
  }
  return true;
}

namespace {

bool exactly_hermitian(const Eigen::MatrixXcd& m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      if (m(i, j) != std::conj(m(j, i))) return false;
    }
  }
  return true;
}

}  // namespace

bool is_self_dual_quaternion(const Eigen::MatrixXcd& m) {
  if (m.rows() % 2 != 0 || !exactly_hermitian(m)) return false;
  const Eigen::Index h = m.rows() / 2;
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < h; ++j) {
      if (m(i + h, j + h) != std::conj(m(i, j))) return false;
      if (m(i + h, j) != -std::conj(m(i, j + h))) return false;
      if (m(i, j + h) != -m(j, i + h)) return false;
    }
  }
  return true;
}

bool is_ctype_block(const Eigen::MatrixXcd& m) {
  if (m.rows() % 2 != 0 || !exactly_hermitian(m)) return false;
  const Eigen::Index h = m.rows() / 2;
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < h; ++j) {
      if (m(i + h, j + h) != -std::conj(m(i, j))) return false;
      if (m(i + h, j) != std::conj(m(i, j + h))) return false;
      if (m(i, j + h) != m(j, i + h)) return false;
    }
  }
  return true;
}

double hermiticity_defect(const Eigen::MatrixXcd& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double VarianceReport::max_abs_z() const {
  double z = 0.0;
  for (const auto& g : groups) z = std::max(z, std::abs(g.z_score));
  return z;
}

namespace {

struct Accumulator {
  std::string name;
  double expected = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  bool nonzero_seen = false;

  void add(double x) {
    sum_sq += x * x;
    ++count;
    if (x != 0.0) nonzero_seen = true;
  }
};

}  // namespace

VarianceReport variance_selftest(EnsembleClass cls, SymmetryCase c, int n, std::size_t draws,
                                 SeedSpec seed, EnsembleRole role) {
  if (draws < 10000) throw std::invalid_argument("variance_selftest needs at least 1e4 draws");
  if (cls != EnsembleClass::GUE && case_of(cls) != c) {
    throw std::invalid_argument("ensemble class " + to_string(cls) + " does not belong to case " +
                                to_string(c));
  }
  check_dimension(c, n);

  const double s = role == EnsembleRole::Parallel ? 1.0 : background_scale(c, n);
  std::vector<Accumulator> acc;
  if (c == SymmetryCase::I) {
    // diag_re, diag_im, off_re, off_im
    double e[4] = {};
    switch (cls) {
      case EnsembleClass::GOE:
        e[0] = 2.0 * s;
        e[2] = s;
        break;
      case EnsembleClass::BType:
        e[3] = 1.0;
        break;
      default:  // GUE = GOE(1) + B-type
        e[0] = 2.0;
        e[2] = 1.0;
        e[3] = 1.0;
        break;
    }
    acc = {{"diag_re", e[0]}, {"diag_im", e[1]}, {"offdiag_re", e[2]}, {"offdiag_im", e[3]}};
  } else {
    // A_diag_re, A_diag_im, A_off_re, A_off_im, B_diag_re, B_diag_im, B_off_re, B_off_im
    double e[8] = {};
    switch (cls) {
      case EnsembleClass::GSE:
        e[0] = s / 2.0;
        e[2] = e[3] = s / 4.0;
        e[6] = e[7] = s / 4.0;
        break;
      case EnsembleClass::CType:
        e[0] = 0.5;
        e[2] = e[3] = 0.25;
        e[4] = e[5] = 0.5;
        e[6] = e[7] = 0.25;
        break;
      default:  // GUE = GSE(1) + C-type
        e[0] = 1.0;
        e[2] = e[3] = 0.5;
        e[4] = e[5] = 0.5;
        e[6] = e[7] = 0.5;
        break;
    }
    acc = {{"A_diag_re", e[0]}, {"A_diag_im", e[1]}, {"A_off_re", e[2]}, {"A_off_im", e[3]},
           {"B_diag_re", e[4]}, {"B_diag_im", e[5]}, {"B_off_re", e[6]}, {"B_off_im", e[7]}};
  }

  VarianceReport report{cls, c, n, draws, true, {}};
  for (std::size_t d = 0; d < draws; ++d) {
    const SeedSpec sd{seed.master_seed, seed.stream_index + d};
    Eigen::MatrixXcd m;
    bool ok = true;
    switch (cls) {
      case EnsembleClass::GOE:
      case EnsembleClass::GSE: {
        auto e = role == EnsembleRole::Parallel ? sample_parallel(c, n, sd)
                                                : sample_background(c, n, sd);
        m = e.entries();
        ok = c == SymmetryCase::I ? is_real_symmetric(m) : is_self_dual_quaternion(m);
        break;
      }
      case EnsembleClass::BType:
      case EnsembleClass::CType: {
        m = sample_perpendicular(c, n, sd).entries();
        ok = c == SymmetryCase::I ? is_imaginary_antisymmetric(m) : is_ctype_block(m);
        break;
      }
      case EnsembleClass::GUE: {
        m = sample_parallel(c, n, sd).entries() + sample_perpendicular(c, n, sd).entries();
        ok = exactly_hermitian(m);
        break;
      }
    }
    report.structure_exact = report.structure_exact && ok;

    if (c == SymmetryCase::I) {
      for (int i = 0; i < n; ++i) {
        acc[0].add(m(i, i).real());
        acc[1].add(m(i, i).imag());
        for (int j = i + 1; j < n; ++j) {
          acc[2].add(m(i, j).real());
          acc[3].add(m(i, j).imag());
        }
      }
    } else {
      const int h = n / 2;
      for (int i = 0; i < h; ++i) {
        acc[0].add(m(i, i).real());
        acc[1].add(m(i, i).imag());
        acc[4].add(m(i, i + h).real());
        acc[5].add(m(i, i + h).imag());
        for (int j = i + 1; j < h; ++j) {
          acc[2].add(m(i, j).real());
          acc[3].add(m(i, j).imag());
          acc[6].add(m(i, j + h).real());
          acc[7].add(m(i, j + h).imag());
        }
      }
    }
  }

  for (const auto& a : acc) {
    VarianceGroup g;
    g.name = a.name;
    g.samples = a.count;
    g.sample_variance = a.sum_sq / static_cast<double>(a.count);
    g.expected_variance = a.expected;
    if (a.expected == 0.0) {
      g.z_score = a.nonzero_seen ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      const double se = a.expected * std::sqrt(2.0 / static_cast<double>(a.count));
      g.z_score = (g.sample_variance - a.expected) / se;
    }
    report.groups.push_back(g);
  }
  return report;
}

}  // namespace rmtfid
