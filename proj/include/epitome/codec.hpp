#pragma once

#include "epitome/image.hpp"

namespace epitome {

/// Transform-quantization codec stub standing in for a real layer codec.
struct CodecConfig {
  double quant_step = 8.0;
  int transform_block = 8;

  void validate() const;
};

struct CodedPlane {
  ImagePlane decoded;
  double rate_bits = 0.0;
  int coded_blocks = 0;
};

/// Orthonormal 2-D DCT-II basis of size n (rows are basis functions).
Eigen::MatrixXd dct_matrix(int n);

/// Codes every transform block: DCT, q = round(c / step), dequantization,
/// inverse DCT, clamp to [0, peak]. The rate is the order-0 entropy of the
/// quantized symbols with one histogram per coefficient position, built
/// over all coded blocks of the plane.
CodedPlane code_plane(const ImagePlane& plane, const CodecConfig& cfg);

/// As above, restricted to the blocks set in the block-aligned `coded_mask`.
/// Other blocks are returned unmodified and cost nothing.
CodedPlane code_plane(const ImagePlane& plane, const CodecConfig& cfg,
                      const Mask& coded_mask);

/// Predictive coding: the residual target - prediction is coded on the
/// blocks of `coded_mask`; decoded = clamp(prediction + residual'). Blocks
/// outside the mask decode to the prediction at zero rate.
CodedPlane code_residual(const ImagePlane& target, const ImagePlane& prediction,
                         const CodecConfig& cfg, const Mask& coded_mask);

/// Enhancement-layer input: epitome blocks from `el_source`, everything else
/// copied from `bl_up`. Throws IntegrityError if `mask` is not aligned to
/// `block` x `block` tiles.
ImagePlane assemble_el(const ImagePlane& el_source, const Mask& mask,
                       const ImagePlane& bl_up, int block = 8);

/// True if every `block` x `block` tile of `mask` is uniformly set or clear.
bool is_block_aligned(const Mask& mask, int block);

}  // namespace epitome
