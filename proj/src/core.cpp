#include "dynaboost/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dynaboost {

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

void require_dim(const Vec& v, Index dim, std::string_view what) {
  if (v.size() != dim) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(dim) + ", got " +
                                std::to_string(v.size()));
  }
}

void require_shape(const Mat& m, Index rows, Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(
        std::string(what) + ": expected shape " + std::to_string(rows) + "x" +
        std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
        std::to_string(m.cols()));
  }
}

void require_finite(const Vec& v, std::string_view what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

Window::Window(int capacity, Index dim) : dim_(dim) {
  if (capacity < 1) throw std::invalid_argument("Window: capacity must be >= 1");
  if (dim < 1) throw std::invalid_argument("Window: dim must be >= 1");
  items_.assign(static_cast<std::size_t>(capacity), Vec::Zero(dim));
}

void Window::push(Vec v) {
  require_dim(v, dim_, "Window::push");
  std::rotate(items_.begin(), items_.begin() + 1, items_.end());
  items_.back() = std::move(v);
  fill_ = std::min(fill_ + 1, capacity());
}

void Window::clear() {
  for (auto& item : items_) item.setZero();
  fill_ = 0;
}

const Vec& Window::slot(int j) const {
  if (j < 0 || j >= capacity()) throw std::out_of_range("Window::slot");
  return items_[static_cast<std::size_t>(j)];
}

const Vec& Window::lag(int i) const {
  if (i < 1 || i > capacity()) throw std::out_of_range("Window::lag");
  return items_[items_.size() - static_cast<std::size_t>(i)];
}

std::span<const Vec> Window::newest(int n) const {
  if (n < 0 || n > capacity()) throw std::out_of_range("Window::newest");
  return std::span<const Vec>(items_).subspan(items_.size() - static_cast<std::size_t>(n));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(base) ^ (index * 0xd1342543de82ef95ULL + 1));
}

RngStream::RngStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

BallSet::BallSet(double radius, Index dim) : radius_(radius), dim_(dim) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("BallSet: radius must be positive and finite");
  }
  if (dim < 1) throw std::invalid_argument("BallSet: dim must be >= 1");
}

bool BallSet::contains(const Vec& v) const {
  return v.size() == dim_ && v.norm() <= radius_;
}

Vec project_to_ball(const Vec& v, const BallSet& set) {
  require_dim(v, set.dim(), "project_to_ball");
  const double norm = v.norm();
  if (norm <= set.radius()) return v;
  return v * (set.radius() / norm);
}

double project_frobenius(std::span<Mat> blocks, double radius) {
  double squared = 0.0;
  for (const auto& block : blocks) squared += block.squaredNorm();
  const double norm = std::sqrt(squared);
  if (norm <= radius) return 1.0;
  const double scale = radius / norm;
  for (auto& block : blocks) block *= scale;
  return scale;
}

Vec clip_componentwise(const Vec& v, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clip_componentwise: need lo < hi");
  return v.cwiseMax(lo).cwiseMin(hi);
}

Vec gaussian(RngStream& rng, const Vec& mean, double std) {
  if (!(std >= 0.0) || !std::isfinite(std)) {
    throw std::invalid_argument("gaussian: std must be finite and non-negative");
  }
  if (std == 0.0) return mean;
  Vec out(mean.size());
  for (Index i = 0; i < out.size(); ++i) out[i] = mean[i] + std * rng.normal();
  return out;
}

}  // namespace dynaboost
