#include "epitome/image.hpp"

#include <cmath>

namespace epitome {

double psnr_from_mse(double mse_value, double peak) {
  if (mse_value < 0.0) throw std::invalid_argument("psnr: negative mse");
  if (mse_value == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse_value);
}

double masked_psnr(const ImagePlane& a, const ImagePlane& b, const Mask& select,
                   double peak) {
  if (!a.same_shape(b) || select.rows() != a.height() ||
      select.cols() != a.width()) {
    throw ShapeError("masked_psnr: dimension mismatch");
  }
  const long n = select.count();
  if (n == 0) throw ShapeError("masked_psnr: empty selection");
  const double sse =
      select.select((a.samples() - b.samples()).square(), 0.0).sum();
  return psnr_from_mse(sse / static_cast<double>(n), peak);
}

Eigen::VectorXd extract_patch(const ImagePlane& plane, Origin origin, int n) {
  if (n <= 0 || !plane.bounds().contains(origin.row, origin.col) ||
      origin.row + n > plane.height() || origin.col + n > plane.width()) {
    throw RangeError("extract_patch: patch outside plane");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(n) * n);
  for (int r = 0; r < n; ++r) {
    out.segment(static_cast<Eigen::Index>(r) * n, n) =
        plane.samples().row(origin.row + r).segment(origin.col, n).transpose();
  }
  return out;
}

void write_patch(ImagePlane& plane, Origin origin, int n,
                 const Eigen::Ref<const Eigen::VectorXd>& patch) {
  if (patch.size() != static_cast<Eigen::Index>(n) * n) {
    throw ShapeError("write_patch: vector length is not n*n");
  }
  if (n <= 0 || origin.row < 0 || origin.col < 0 ||
      origin.row + n > plane.height() || origin.col + n > plane.width()) {
    throw RangeError("write_patch: patch outside plane");
  }
  for (int r = 0; r < n; ++r) {
    plane.samples().row(origin.row + r).segment(origin.col, n) =
        patch.segment(static_cast<Eigen::Index>(r) * n, n).transpose();
  }
}

ImagePlane crop_to_multiple(const ImagePlane& plane, int multiple) {
  if (multiple <= 0) throw std::invalid_argument("crop: multiple must be > 0");
  const int w = plane.width() / multiple * multiple;
  const int h = plane.height() / multiple * multiple;
  if (w == 0 || h == 0) throw ShapeError("crop: plane smaller than one block");
  return ImagePlane(plane.samples().topLeftCorner(h, w), plane.peak());
}

BlockGrid::BlockGrid(int width, int height, int block_size)
    : width_(width), height_(height), block_size_(block_size) {
  if (block_size <= 0 || width <= 0 || height <= 0) {
    throw ShapeError("block grid: non-positive dimension");
  }
  if (width % block_size != 0 || height % block_size != 0) {
    throw ShapeError("block grid: dimensions must be multiples of block size");
  }
}

std::vector<PixelRegion> BlockGrid::blocks() const {
  std::vector<PixelRegion> out;
  out.reserve(static_cast<std::size_t>(count()));
  for (int i = 0; i < count(); ++i) out.push_back(region(i));
  return out;
}

}  // namespace epitome
