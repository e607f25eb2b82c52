#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "smfsync/linalg.hpp"

namespace smfsync::testing {

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Mat random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1) {
  Mat a = random_matrix(rng, n, n);
  return a * a.transpose() + floor * Mat::Identity(n, n);
}

/// Point of the closed unit ball; every fourth draw lies on the sphere.
inline Vec random_in_ball(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Vec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = g(rng);
  z /= z.norm();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (rng() % 4 != 0) z *= std::pow(u(rng), 1.0 / double(n));
  return z;
}

}  // namespace smfsync::testing
