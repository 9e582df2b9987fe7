#pragma once

// Gaussian matrix ensembles for the perturbed Hamiltonian H = H0 + lpar Vpar + lperp Vperp.
//
// All matrices are stored as dense complex matrices. Symplectic (case II)
// matrices use the 2N' x 2N' representation with the first N' indices forming
// the upper block:
//
//   GSE (self-dual)   [[A,  B ], [-B*,  A*]]   A Hermitian, B antisymmetric
//   C-type            [[A,  B ], [ B*, -A*]]   A Hermitian, B symmetric
//
// Variance conventions (entries of the complex representation, s = N/pi^2 for
// the background with N the real/quaternion dimension, s = 1 for perturbations):
//
//   GOE     <H_ii^2> = 2s, <H_ij^2> = s
//   GSE     Re/Im of A_ij, B_ij: s/4 each; A_ii: s/2
//   B-type  V = iS, S real antisymmetric with <S_ij^2> = 1
//   C-type  Re/Im of A_ij, B_ij: 1/4 each; A_ii: 1/2; Re/Im of B_ii: 1/2 each
//
// which reproduce the quaternion second moments N/pi^2 (d_il d_jk -+ ...) and
// make lpar = lperp a GUE perturbation in both cases.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtfid/rng.hpp"
#include "rmtfid/strengths.hpp"

namespace rmtfid {

enum class EnsembleClass { GOE, GSE, BType, CType, GUE };

std::string to_string(EnsembleClass c);

/// Which sampler produced a matrix.
enum class EnsembleRole { Background, Parallel, Perpendicular, Perturbed };

/// A sampled Hermitian matrix tagged with its symmetry class.
class EnsembleMatrix {
 public:
  EnsembleMatrix(Eigen::MatrixXcd entries, EnsembleClass cls, SeedSpec seed = {});

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  EnsembleClass ensemble_class() const { return class_; }
  const SeedSpec& seed_record() const { return seed_; }

 private:
  Eigen::MatrixXcd entries_;
  EnsembleClass class_;
  SeedSpec seed_;
};

// Substream ids used to draw the three matrices of one realization.
inline constexpr std::uint64_t kBackgroundSubstream = 0;
inline constexpr std::uint64_t kParallelSubstream = 1;
inline constexpr std::uint64_t kPerpendicularSubstream = 2;

/// GOE (case I) or GSE (case II) background with mean level spacing one at the
/// band centre. For case II `n` is the complex dimension 2N'.
EnsembleMatrix sample_background(SymmetryCase c, int n, SeedSpec seed);

/// Symmetry-conserving perturbation, unit-scale GOE or GSE.
EnsembleMatrix sample_parallel(SymmetryCase c, int n, SeedSpec seed);

/// Symmetry-breaking perturbation, B-type (case I) or C-type (case II).
EnsembleMatrix sample_perpendicular(SymmetryCase c, int n, SeedSpec seed);

/// H = H0 + lpar Vpar + lperp Vperp. The result is tagged with the background
/// class when lperp == 0 and GUE otherwise.
EnsembleMatrix assemble(const EnsembleMatrix& h0, const EnsembleMatrix& vpar,
                        const EnsembleMatrix& vperp, const PerturbationStrengths& strengths);

// Structural predicates. All are exact comparisons on the stored entries.
bool is_real_symmetric(const Eigen::MatrixXcd& m);
bool is_imaginary_antisymmetric(const Eigen::MatrixXcd& m);
bool is_self_dual_quaternion(const Eigen::MatrixXcd& m);
bool is_ctype_block(const Eigen::MatrixXcd& m);
/// max |m - m^dagger|.
double hermiticity_defect(const Eigen::MatrixXcd& m);

struct VarianceGroup {
  std::string name;
  double sample_variance = 0.0;
  double expected_variance = 0.0;
  double z_score = 0.0;
  std::size_t samples = 0;
};

struct VarianceReport {
  EnsembleClass ensemble_class;
  SymmetryCase symmetry_case;
  int dim = 0;
  std::size_t draws = 0;
  bool structure_exact = true;
  std::vector<VarianceGroup> groups;

  double max_abs_z() const;
};

/// Empirical second moments per entry group against the ensemble definition.
///
/// GOE and GSE use the background scale (N/pi^2) unless `role` is Parallel.
/// GUE checks the combined perturbation Vpar + Vperp of the given case. Groups
/// whose expected variance is zero must be exactly zero in every draw.
VarianceReport variance_selftest(EnsembleClass cls, SymmetryCase c, int n, std::size_t draws,
                                 SeedSpec seed, EnsembleRole role = EnsembleRole::Background);

}  // namespace rmtfid
