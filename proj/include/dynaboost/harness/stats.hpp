#pragma once

#include <span>
#include <vector>

namespace dynaboost::harness {

// y_t = (1/t) sum_{s<=t} c_s.
std::vector<double> running_average(std::span<const double> costs);

// Per-round statistics of the running-average cost across runs.
struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> std;         // sample std (n - 1); zero for one run
  std::vector<double> half_width;  // 1.96 std / sqrt(n)
  int runs = 0;

  bool has_ci() const { return runs >= 2; }
  std::size_t rounds() const { return mean.size(); }
  double ci_lo(std::size_t t) const { return mean[t] - half_width[t]; }
  double ci_hi(std::size_t t) const { return mean[t] + half_width[t]; }
};

// `costs` holds the instantaneous cost series of each run. Throws
// std::invalid_argument when there are no runs or the lengths differ.
SeriesStats aggregate(const std::vector<std::vector<double>>& costs);

}  // namespace dynaboost::harness
