#pragma once

// Central finite-difference checks of the analytic gradients: the proxy
// window gradient (LDS and pendulum), the GPC parameter gradient and the
// recurrent BPTT gradient.

#include <cstdint>
#include <string>
#include <vector>

namespace dynaboost::harness {

struct GradcheckResult {
  std::string name;
  int points = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return max_rel_error <= tolerance; }
};

// Each check evaluates `points` random points with step h = 1e-5. The error
// at a point is |analytic - numeric| / max(|numeric|, 1e-8) in the 2-norm.
std::vector<GradcheckResult> run_gradchecks(std::uint64_t seed = 7, int points = 100);

}  // namespace dynaboost::harness
