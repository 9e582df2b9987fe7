#include "rmtfid/strengths.hpp"

#include <cmath>

namespace rmtfid {

std::string to_string(SymmetryCase c) { return c == SymmetryCase::I ? "I" : "II"; }

SymmetryCase parse_symmetry_case(const std::string& text) {
  if (text == "I" || text == "1") return SymmetryCase::I;
  if (text == "II" || text == "2") return SymmetryCase::II;
  throw std::invalid_argument("unknown symmetry case '" + text + "' (expected I or II)");
}

PerturbationStrengths PerturbationStrengths::from_ratio(double lambda, double ratio) {
  if (!(lambda >= 0.0) || !(ratio >= 0.0)) {
    throw std::invalid_argument("lambda and ratio must be non-negative");
  }
  if (std::isinf(ratio)) return {lambda, 0.0};
  return {lambda * std::sqrt(ratio / (1.0 + ratio)), lambda / std::sqrt(1.0 + ratio)};
}

}  // namespace rmtfid
