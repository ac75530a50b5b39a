#include "epitome/resample.hpp"

#include <algorithm>
#include <numeric>

namespace epitome {
namespace {

using Samples = ImagePlane::Samples;

// Horizontal 2x interpolation of every row; edge replication at borders.
Samples upsample_rows(const Samples& in) {
  const Eigen::Index h = in.rows();
  const Eigen::Index w = in.cols();
  Samples out(h, 2 * w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      out(r, 2 * c) = in(r, c);
      double acc = 0.0;
      for (int t = 0; t < 8; ++t) {
        const Eigen::Index src = std::clamp<Eigen::Index>(c - 3 + t, 0, w - 1);
        acc += kUpsampleTaps[static_cast<std::size_t>(t)] * in(r, src);
      }
      out(r, 2 * c + 1) = acc / 64.0;
    }
  }
  return out;
}

Samples downsample_rows(const Samples& in, std::span<const int> taps) {
  const Eigen::Index h = in.rows();
  const Eigen::Index w = in.cols();
  const int half = static_cast<int>(taps.size() / 2);
  const double norm = std::accumulate(taps.begin(), taps.end(), 0.0);
  Samples out(h, w / 2);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w / 2; ++c) {
      double acc = 0.0;
      for (int t = 0; t < static_cast<int>(taps.size()); ++t) {
        const Eigen::Index src =
            std::clamp<Eigen::Index>(2 * c + t - half, 0, w - 1);
        acc += taps[static_cast<std::size_t>(t)] * in(r, src);
      }
      out(r, c) = acc / norm;
    }
  }
  return out;
}

}  // namespace

ImagePlane upsample_2x_unclamped(const ImagePlane& plane) {
  Samples horiz = upsample_rows(plane.samples());
  Samples vert = upsample_rows(horiz.transpose()).transpose();
  return ImagePlane(std::move(vert), plane.peak());
}

ImagePlane upsample_2x(const ImagePlane& plane) {
  return upsample_2x_unclamped(plane).clamped();
}

ImagePlane downsample_2x(const ImagePlane& plane, std::span<const int> taps) {
  if (plane.width() % 2 != 0 || plane.height() % 2 != 0) {
    throw ShapeError("downsample_2x: dimensions must be even");
  }
  if (taps.size() % 2 == 0 ||
      std::accumulate(taps.begin(), taps.end(), 0) == 0) {
    throw std::invalid_argument("downsample_2x: need odd-length DC-normalizable taps");
  }
  Samples horiz = downsample_rows(plane.samples(), taps);
  Samples vert = downsample_rows(horiz.transpose(), taps).transpose();
  return ImagePlane(std::move(vert), plane.peak());
}

}  // namespace epitome
