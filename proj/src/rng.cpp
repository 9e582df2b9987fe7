#include "rmtfid/rng.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace rmtfid {

namespace {

std::seed_seq make_seed_seq(SeedSpec seed, std::uint64_t substream) {
  const std::array<std::uint32_t, 6> words{
      static_cast<std::uint32_t>(seed.master_seed),
      static_cast<std::uint32_t>(seed.master_seed >> 32),
      static_cast<std::uint32_t>(seed.stream_index),
      static_cast<std::uint32_t>(seed.stream_index >> 32),
      static_cast<std::uint32_t>(substream),
      static_cast<std::uint32_t>(substream >> 32)};
  return std::seed_seq(words.begin(), words.end());
}

}  // namespace

GaussianStream::GaussianStream(SeedSpec seed, std::uint64_t substream) {
  auto seq = make_seed_seq(seed, substream);
  engine_.seed(seq);
}

double GaussianStream::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double GaussianStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

double GaussianStream::normal(double variance) { return std::sqrt(variance) * normal(); }

}  // namespace rmtfid
