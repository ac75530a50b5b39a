#include "epitome/codec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

namespace epitome {
namespace {

// Codes `residual` in place on the flagged blocks and returns the rate.
// Unflagged blocks are zeroed, so callers add them back from their source.
double transform_code(ImagePlane::Samples& residual, const CodecConfig& cfg,
                      const std::vector<unsigned char>& coded, int& coded_blocks) {
  const int n = cfg.transform_block;
  const int bw = static_cast<int>(residual.cols()) / n;
  const int bh = static_cast<int>(residual.rows()) / n;
  const Eigen::MatrixXd basis = dct_matrix(n);

  std::vector<std::map<long long, long>> histograms(static_cast<std::size_t>(n) * n);
  coded_blocks = 0;
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      auto tile = residual.block(by * n, bx * n, n, n);
      if (!coded[static_cast<std::size_t>(by) * bw + bx]) {
        tile.setZero();
        continue;
      }
      ++coded_blocks;
      const Eigen::MatrixXd coeffs = basis * tile.matrix() * basis.transpose();
      Eigen::MatrixXd dequant(n, n);
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
          const double q = std::round(coeffs(u, v) / cfg.quant_step);
          ++histograms[static_cast<std::size_t>(u) * n + v][static_cast<long long>(q)];
          dequant(u, v) = q * cfg.quant_step;
        }
      }
      tile = (basis.transpose() * dequant * basis).array();
    }
  }

  double bits = 0.0;
  for (const auto& hist : histograms) {
    long total = 0;
    for (const auto& [symbol, count] : hist) total += count;
    for (const auto& [symbol, count] : hist) {
      bits -= static_cast<double>(count) *
              std::log2(static_cast<double>(count) / static_cast<double>(total));
    }
  }
  return bits;
}

std::vector<unsigned char> block_flags(const Mask& mask, int n) {
  if (!is_block_aligned(mask, n)) throw IntegrityError("codec: mask is not block-aligned");
  const int bw = static_cast<int>(mask.cols()) / n;
  const int bh = static_cast<int>(mask.rows()) / n;
  std::vector<unsigned char> flags(static_cast<std::size_t>(bw) * bh);
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      flags[static_cast<std::size_t>(by) * bw + bx] = mask(by * n, bx * n) ? 1 : 0;
    }
  }
  return flags;
}

void check_shape(const ImagePlane& plane, const CodecConfig& cfg) {
  cfg.validate();
  if (plane.width() % cfg.transform_block != 0 ||
      plane.height() % cfg.transform_block != 0) {
    throw ShapeError("codec: dimensions must be multiples of the transform block");
  }
}

}  // namespace

void CodecConfig::validate() const {
  if (!(quant_step > 0.0)) throw std::invalid_argument("codec: quant_step must be > 0");
  if (transform_block < 1) throw std::invalid_argument("codec: transform_block must be >= 1");
}

Eigen::MatrixXd dct_matrix(int n) {
  Eigen::MatrixXd m(n, n);
  for (int k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) {
      m(k, i) = alpha * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
    }
  }
  return m;
}

bool is_block_aligned(const Mask& mask, int block) {
  if (block < 1 || mask.rows() % block != 0 || mask.cols() % block != 0) return false;
  for (Eigen::Index r = 0; r < mask.rows(); r += block) {
    for (Eigen::Index c = 0; c < mask.cols(); c += block) {
      const auto tile = mask.block(r, c, block, block);
      if (tile.any() && !tile.all()) return false;
    }
  }
  return true;
}

CodedPlane code_plane(const ImagePlane& plane, const CodecConfig& cfg) {
  return code_plane(plane, cfg, Mask::Constant(plane.height(), plane.width(), true));
}

CodedPlane code_plane(const ImagePlane& plane, const CodecConfig& cfg,
                      const Mask& coded_mask) {
  check_shape(plane, cfg);
  if (coded_mask.rows() != plane.height() || coded_mask.cols() != plane.width()) {
    throw ShapeError("codec: mask does not match plane");
  }
  const auto flags = block_flags(coded_mask, cfg.transform_block);
  ImagePlane::Samples work = plane.samples();
  CodedPlane out;
  out.rate_bits = transform_code(work, cfg, flags, out.coded_blocks);
  out.decoded = ImagePlane(
      coded_mask.select(work.max(0.0).min(plane.peak()), plane.samples()), plane.peak());
  return out;
}

CodedPlane code_residual(const ImagePlane& target, const ImagePlane& prediction,
                         const CodecConfig& cfg, const Mask& coded_mask) {
  check_shape(target, cfg);
  if (!target.same_shape(prediction) || coded_mask.rows() != target.height() ||
      coded_mask.cols() != target.width()) {
    throw ShapeError("codec: target, prediction and mask must share dimensions");
  }
  const auto flags = block_flags(coded_mask, cfg.transform_block);
  ImagePlane::Samples residual = target.samples() - prediction.samples();
  CodedPlane out;
  out.rate_bits = transform_code(residual, cfg, flags, out.coded_blocks);
  const ImagePlane::Samples decoded =
      (prediction.samples() + residual).max(0.0).min(target.peak());
  out.decoded = ImagePlane(coded_mask.select(decoded, prediction.samples()), target.peak());
  return out;
}

ImagePlane assemble_el(const ImagePlane& el_source, const Mask& mask,
                       const ImagePlane& bl_up, int block) {
  if (!el_source.same_shape(bl_up) || mask.rows() != el_source.height() ||
      mask.cols() != el_source.width()) {
    throw ShapeError("assemble_el: planes and mask must share dimensions");
  }
  if (!is_block_aligned(mask, block)) {
    throw IntegrityError("assemble_el: epitome mask is not block-aligned");
  }
  return ImagePlane(mask.select(el_source.samples(), bl_up.samples()), el_source.peak());
}

}  // namespace epitome
