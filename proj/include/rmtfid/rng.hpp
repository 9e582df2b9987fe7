#pragma once

#include <cstdint>
#include <random>

namespace rmtfid {

/// Seed material for one realization: a run-wide master seed plus the
/// realization (stream) index.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// Deterministic Gaussian source keyed by (master_seed, stream_index, substream).
///
/// The engine is mt19937_64 initialised from a seed_seq over the 32-bit words of
/// the three keys, so the state is fully specified by the standard. Uniforms are
/// built from the top 53 bits and normals come from Box-Muller; both avoid the
/// implementation-defined std:: distributions so streams are identical across
/// standard libraries.
class GaussianStream {
 public:
  GaussianStream(SeedSpec seed, std::uint64_t substream = 0);

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal deviate.
  double normal();
  /// Normal deviate with the given variance.
  double normal(double variance);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rmtfid
