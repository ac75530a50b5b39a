#pragma once

#include <cstdint>

#include "epitome/image.hpp"

namespace epitome {

/// Flat plane.
ImagePlane constant_fixture(int width, int height, double value = 128.0);

/// A seeded random `period` x `period` tile of integer samples, repeated.
ImagePlane periodic_fixture(int width, int height, int period, std::uint64_t seed);

/// City-like facade: a random tile smoothed twice with a wrap-around
/// [1 2 1]^2 kernel so it repeats seamlessly, plus Gaussian noise.
ImagePlane smooth_periodic_fixture(int width, int height, int period, double noise_sigma,
                                   std::uint64_t seed);

/// Independent uniform integer samples in [0, 255].
ImagePlane noise_fixture(int width, int height, std::uint64_t seed);

/// Pseudo-periodic brick wall: a regular 12 x 20 brick/mortar layout with
/// random per-course offsets, per-pixel grain, a slow illumination drift,
/// a light blur and mild noise. The layout repeats, the grain does not.
ImagePlane texture_fixture(int width, int height, std::uint64_t seed);

}  // namespace epitome
