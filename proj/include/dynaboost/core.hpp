#pragma once

// Shared numeric primitives: vector/matrix aliases, sliding windows,
// seeded random streams and the projection/clipping helpers used by every
// other module. All arithmetic is double precision.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dynaboost {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

// Throws std::invalid_argument naming `what` when v.size() != dim.
void require_dim(const Vec& v, Index dim, std::string_view what);
void require_shape(const Mat& m, Index rows, Index cols, std::string_view what);
void require_finite(const Vec& v, std::string_view what);

// Fixed-capacity history of equally sized vectors, oldest first.
//
// The window behaves as if it had been pre-filled with `capacity` zero
// vectors: before it is full, the oldest slots read as zero. Pushing onto a
// full window evicts the oldest entry.
class Window {
 public:
  Window(int capacity, Index dim);

  void push(Vec v);
  void clear();

  // Slot 0 is the oldest entry, slot capacity()-1 the newest.
  const Vec& slot(int j) const;
  // lag(1) is the newest entry, lag(capacity()) the oldest.
  const Vec& lag(int i) const;

  // All slots, oldest first, zero-padded.
  std::span<const Vec> items() const { return items_; }
  // The `n` newest slots, oldest first.
  std::span<const Vec> newest(int n) const;

  int capacity() const { return static_cast<int>(items_.size()); }
  int fill() const { return fill_; }
  Index dim() const { return dim_; }

 private:
  std::vector<Vec> items_;
  Index dim_;
  int fill_ = 0;
};

// Mixes a base seed with an index into an independent 64-bit seed
// (SplitMix64 finalizer). Chain calls to derive nested streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Deterministic random stream.
//
// Uniforms come from the top 53 bits of std::mt19937_64, whose output sequence
// is fixed by the standard. Normals use the Box-Muller transform with the
// second variate of each pair cached, so a seed reproduces the same draws on
// every platform (modulo last-ulp differences in libm's log/sin/cos).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  static RngStream derive(std::uint64_t base, std::uint64_t index) {
    return RngStream(derive_seed(base, index));
  }

  // Uniform on [0, 1).
  double uniform();
  // Standard normal.
  double normal();

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::optional<double> spare_;
};

// Euclidean ball {u : |u| <= radius} in R^dim.
class BallSet {
 public:
  BallSet(double radius, Index dim);

  double radius() const { return radius_; }
  Index dim() const { return dim_; }
  double diameter() const { return 2.0 * radius_; }
  bool contains(const Vec& v) const;

 private:
  double radius_;
  Index dim_;
};

Vec project_to_ball(const Vec& v, const BallSet& set);

// Frobenius-norm projection of a stacked parameter block onto radius r.
// Scales every matrix by the same factor; returns the factor applied.
double project_frobenius(std::span<Mat> blocks, double radius);

Vec clip_componentwise(const Vec& v, double lo, double hi);

// mean + std * z with z standard normal. std == 0 returns mean exactly.
Vec gaussian(RngStream& rng, const Vec& mean, double std);

}  // namespace dynaboost
