#pragma once

#include <array>
#include <span>

#include "epitome/image.hpp"

namespace epitome {

/// 8-tap half-sample interpolation kernel, normalized by 64.
inline constexpr std::array<int, 8> kUpsampleTaps{-1, 4, -11, 40, 40, -11, 4, -1};

/// Default 7-tap binomial low-pass used before decimation, normalized by 64.
inline constexpr std::array<int, 7> kBinomialTaps{1, 6, 15, 20, 15, 6, 1};

/// Dyadic upsampling: even-phase samples are copied, odd-phase samples come
/// from the 8-tap kernel. Borders use edge replication. Not clamped.
ImagePlane upsample_2x_unclamped(const ImagePlane& plane);

/// upsample_2x_unclamped followed by a clamp to [0, peak].
ImagePlane upsample_2x(const ImagePlane& plane);

/// Separable low-pass + decimation by two. `taps` must be odd-length and is
/// normalized by its sum. Throws ShapeError on odd dimensions.
ImagePlane downsample_2x(const ImagePlane& plane,
                         std::span<const int> taps = kBinomialTaps);

}  // namespace epitome
