#include "dynaboost/harness/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace dynaboost::harness {

std::vector<double> running_average(std::span<const double> costs) {
  std::vector<double> out(costs.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < costs.size(); ++t) {
    sum += costs[t];
    out[t] = sum / static_cast<double>(t + 1);
  }
  return out;
}

SeriesStats aggregate(const std::vector<std::vector<double>>& costs) {
  if (costs.empty()) throw std::invalid_argument("aggregate: no runs");
  const std::size_t T = costs.front().size();
  for (const auto& c : costs) {
    if (c.size() != T) throw std::invalid_argument("aggregate: runs have different lengths");
  }
  std::vector<std::vector<double>> avg;
  avg.reserve(costs.size());
  for (const auto& c : costs) avg.push_back(running_average(c));

  const auto n = static_cast<double>(costs.size());
  SeriesStats s;
  s.runs = static_cast<int>(costs.size());
  s.mean.assign(T, 0.0);
  s.std.assign(T, 0.0);
  s.half_width.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double mean = 0.0;
    for (const auto& a : avg) mean += a[t];
    mean /= n;
    s.mean[t] = mean;
    if (s.runs < 2) continue;
    double ss = 0.0;
    for (const auto& a : avg) ss += (a[t] - mean) * (a[t] - mean);
    s.std[t] = std::sqrt(ss / (n - 1.0));
    s.half_width[t] = 1.96 * s.std[t] / std::sqrt(n);
  }
  return s;
}

}  // namespace dynaboost::harness
