#pragma once

#include <Eigen/Core>

#include <random>

#include "epitome/image.hpp"

namespace epitome::test {

inline ImagePlane random_plane(int width, int height, std::uint64_t seed,
                               double lo = 0.0, double hi = 255.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  ImagePlane p(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) p(r, c) = dist(rng);
  }
  return p;
}

inline ImagePlane integer_noise(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, 255);
  ImagePlane p(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) p(r, c) = dist(rng);
  }
  return p;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

// Scalar-loop MSE between two equal regions of (possibly different) planes.
inline double loop_mse(const ImagePlane& a, Origin oa, const ImagePlane& b, Origin ob, int n) {
  double acc = 0.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double d = a(oa.row + r, oa.col + c) - b(ob.row + r, ob.col + c);
      acc += d * d;
    }
  }
  return acc / (static_cast<double>(n) * n);
}

}  // namespace epitome::test
