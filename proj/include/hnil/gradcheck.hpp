#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hnil/encoder.hpp"

namespace hnil {

struct GradCheckConfig {
  Dims dims{8, 8, 8};
  int vocab = 50;  // table size including the unknown slot
  int users = 20;
  std::uint64_t seed = 1;
  double eps = 1e-5;
  bool perturb = false;  // test hook: corrupt one analytic gradient entry
};

struct TensorCheck {
  std::string name;
  double max_rel = 0.0;
};

struct GradCheckResult {
  double max_rel = 0.0;
  long entries = 0;
  double loss = 0.0;
  std::vector<TensorCheck> tensors;
};

// Builds a small random fixture (corpus, walk windows, triplets), computes
// analytic gradients in 64-bit, and compares every parameter entry against
// central finite differences of the total loss.
GradCheckResult run_gradcheck(const GradCheckConfig& cfg);

}  // namespace hnil
