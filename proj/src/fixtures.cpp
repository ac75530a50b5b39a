#include "epitome/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace epitome {
namespace {

Eigen::ArrayXXd random_tile(int size, std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  Eigen::ArrayXXd tile(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) tile(r, c) = dist(rng);
  }
  return tile;
}

}  // namespace

ImagePlane constant_fixture(int width, int height, double value) {
  return ImagePlane(width, height, value);
}

ImagePlane periodic_fixture(int width, int height, int period, std::uint64_t seed) {
  if (period < 1) throw std::invalid_argument("periodic_fixture: period must be >= 1");
  std::mt19937_64 rng(seed);
  const Eigen::ArrayXXd tile = random_tile(period, rng, 0, 255);
  ImagePlane out(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) out(r, c) = tile(r % period, c % period);
  }
  return out;
}

ImagePlane smooth_periodic_fixture(int width, int height, int period, double noise_sigma,
                                   std::uint64_t seed) {
  if (period < 1) throw std::invalid_argument("smooth_periodic_fixture: period must be >= 1");
  std::mt19937_64 rng(seed);
  Eigen::ArrayXXd tile = random_tile(period, rng, 40, 220);
  const auto wrap = [period](int i) { return (i % period + period) % period; };
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::ArrayXXd next(period, period);
    for (int r = 0; r < period; ++r) {
      for (int c = 0; c < period; ++c) {
        double s = 0.0;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            s += tile(wrap(r + dr), wrap(c + dc)) * (2 - std::abs(dr)) * (2 - std::abs(dc));
          }
        }
        next(r, c) = s / 16.0;
      }
    }
    tile = next;
  }
  std::normal_distribution<double> noise(0.0, noise_sigma);
  ImagePlane out(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      out(r, c) = std::clamp(std::round(tile(r % period, c % period) + noise(rng)), 0.0, 255.0);
    }
  }
  return out;
}

ImagePlane noise_fixture(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, 255);
  ImagePlane out(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) out(r, c) = dist(rng);
  }
  return out;
}

ImagePlane texture_fixture(int width, int height, std::uint64_t seed) {
  constexpr int kBrickH = 12;
  constexpr int kBrickW = 20;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> offset(0, kBrickW - 1);
  std::vector<int> course_offset(static_cast<std::size_t>(height / kBrickH + 1));
  for (auto& o : course_offset) o = offset(rng);

  // Periodic brick/mortar layout with per-pixel grain, softened by a
  // [1 2 1]^2 blur. The layout repeats, the grain never does.
  std::uniform_int_distribution<int> grain(-60, 60);
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::ArrayXXd raw(height, width);
  for (int r = 0; r < height; ++r) {
    const int course = r / kBrickH;
    for (int c = 0; c < width; ++c) {
      const int tc = (c + course_offset[static_cast<std::size_t>(course)]) % kBrickW;
      const bool mortar = r % kBrickH < 3 || tc < 3;
      const double drift = 25.0 * std::sin(two_pi * r / (1.7 * height)) *
                           std::cos(two_pi * c / (1.3 * width));
      raw(r, c) = (mortar ? 80.0 : 160.0 + grain(rng)) + drift;
    }
  }
  std::normal_distribution<double> noise(0.0, 1.5);
  const double w[3] = {1.0, 2.0, 1.0};
  ImagePlane out(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          acc += w[dr + 1] * w[dc + 1] *
                 raw(std::clamp(r + dr, 0, height - 1), std::clamp(c + dc, 0, width - 1));
        }
      }
      out(r, c) = std::clamp(std::round(acc / 16.0 + noise(rng)), 0.0, 255.0);
    }
  }
  return out;
}

}  // namespace epitome
