#pragma once

#include <Eigen/Core>

#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "epitome/errors.hpp"

namespace epitome {

/// Top-left corner of a pixel region, ordered raster-scan (row first).
struct Origin {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Origin&, const Origin&) = default;
};

/// Axis-aligned rectangle of pixels inside a plane.
struct PixelRegion {
  Origin origin;
  int height = 0;
  int width = 0;

  int top() const { return origin.row; }
  int left() const { return origin.col; }
  int bottom() const { return origin.row + height; }  // exclusive
  int right() const { return origin.col + width; }    // exclusive
  long area() const { return static_cast<long>(height) * width; }

  bool contains(int row, int col) const {
    return row >= top() && row < bottom() && col >= left() && col < right();
  }
  bool intersects(const PixelRegion& o) const {
    return top() < o.bottom() && o.top() < bottom() && left() < o.right() &&
           o.left() < right();
  }

  friend bool operator==(const PixelRegion&, const PixelRegion&) = default;
};

inline PixelRegion square_region(Origin origin, int side) {
  return PixelRegion{origin, side, side};
}

template <typename Scalar>
using PlaneArray =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Boolean plane; rows = image rows.
using Mask = PlaneArray<bool>;

/// Single-channel plane of samples in [0, peak], stored row-major.
/// Rows index image rows, so samples()(row, col).
template <typename Scalar>
class Plane {
 public:
  using Samples = PlaneArray<Scalar>;

  Plane() = default;

  Plane(int width, int height, Scalar fill = Scalar(0), Scalar peak = Scalar(255))
      : samples_(Samples::Constant(checked(height), checked(width), fill)),
        peak_(peak) {}

  explicit Plane(Samples samples, Scalar peak = Scalar(255))
      : samples_(std::move(samples)), peak_(peak) {
    if (samples_.rows() <= 0 || samples_.cols() <= 0) {
      throw ShapeError("plane dimensions must be positive");
    }
  }

  int width() const { return static_cast<int>(samples_.cols()); }
  int height() const { return static_cast<int>(samples_.rows()); }
  long size() const { return static_cast<long>(samples_.size()); }
  Scalar peak() const { return peak_; }
  void set_peak(Scalar peak) { peak_ = peak; }

  PixelRegion bounds() const { return PixelRegion{{0, 0}, height(), width()}; }
  bool same_shape(const Plane& o) const {
    return width() == o.width() && height() == o.height();
  }

  Scalar& operator()(int row, int col) { return samples_(row, col); }
  Scalar operator()(int row, int col) const { return samples_(row, col); }

  Samples& samples() { return samples_; }
  const Samples& samples() const { return samples_; }

  auto block(const PixelRegion& r) {
    return samples_.block(r.top(), r.left(), r.height, r.width);
  }
  auto block(const PixelRegion& r) const {
    return samples_.block(r.top(), r.left(), r.height, r.width);
  }

  /// Row-major view of all samples as a flat vector.
  auto flat() const {
    return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(
        samples_.data(), samples_.size());
  }

  Plane clamped() const {
    return Plane(samples_.max(Scalar(0)).min(peak_), peak_);
  }

  friend bool operator==(const Plane& a, const Plane& b) {
    return a.same_shape(b) && a.peak_ == b.peak_ &&
           (a.samples_ == b.samples_).all();
  }

 private:
  static int checked(int v) {
    if (v <= 0) throw ShapeError("plane dimensions must be positive");
    return v;
  }

  Samples samples_;
  Scalar peak_ = Scalar(255);
};

using ImagePlane = Plane<double>;

/// Sentinel returned by psnr() for identical inputs.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// Mean of squared differences between two same-shaped dense expressions.
template <typename A, typename B>
double mse(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("mse: dimension mismatch");
  }
  if (a.size() == 0) throw ShapeError("mse: empty operands");
  return (a.derived().template cast<double>().array() -
          b.derived().template cast<double>().array())
             .square()
             .sum() /
         static_cast<double>(a.size());
}

template <typename Scalar>
double mse(const Plane<Scalar>& a, const Plane<Scalar>& b) {
  return mse(a.samples(), b.samples());
}

/// Peak signal-to-noise ratio from an MSE value.
double psnr_from_mse(double mse_value, double peak);

template <typename Scalar>
double psnr(const Plane<Scalar>& a, const Plane<Scalar>& b, double peak) {
  return psnr_from_mse(mse(a, b), peak);
}

/// PSNR restricted to pixels where `select` is true.
double masked_psnr(const ImagePlane& a, const ImagePlane& b, const Mask& select,
                   double peak);

/// Copies an n x n patch starting at `origin` into a row-major vector.
Eigen::VectorXd extract_patch(const ImagePlane& plane, Origin origin, int n);

/// Inverse of extract_patch: writes a row-major vector back into the plane.
void write_patch(ImagePlane& plane, Origin origin, int n,
                 const Eigen::Ref<const Eigen::VectorXd>& patch);

/// Drops trailing rows/columns so both dimensions are multiples of `multiple`.
ImagePlane crop_to_multiple(const ImagePlane& plane, int multiple);

/// Partition of a plane into non-overlapping square blocks, raster order.
class BlockGrid {
 public:
  BlockGrid(int width, int height, int block_size);

  int block_size() const { return block_size_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int blocks_per_row() const { return width_ / block_size_; }
  int blocks_per_col() const { return height_ / block_size_; }
  int count() const { return blocks_per_row() * blocks_per_col(); }

  Origin origin(int index) const {
    return {(index / blocks_per_row()) * block_size_,
            (index % blocks_per_row()) * block_size_};
  }
  PixelRegion region(int index) const {
    return square_region(origin(index), block_size_);
  }
  int index_at(int row, int col) const {
    return (row / block_size_) * blocks_per_row() + col / block_size_;
  }
  std::vector<PixelRegion> blocks() const;

 private:
  int width_;
  int height_;
  int block_size_;
};

}  // namespace epitome
