#pragma once

#include <json.hpp>

#include "epitome/codec.hpp"
#include "epitome/epitome.hpp"
#include "epitome/restoration.hpp"

namespace epitome {

struct LayerBitstreamStats {
  double bl_rate = 0.0;    // bits
  double el_rate = 0.0;    // bits
  double mask_bits = 0.0;  // side information, 1 bit per EL codec block
  int coded_block_count = 0;
  double epitome_fraction = 0.0;  // percent of EL pixels

  /// Rate used for RD evaluation: base + enhancement, mask excluded.
  double total_rate() const { return bl_rate + el_rate; }
};

struct PipelineResult {
  ImagePlane decoded_bl;        // half resolution
  ImagePlane bl_up;
  ImagePlane el_epitome_plane;  // decoded EL before restoration
  ImagePlane restored_el;
  Mask epitome_mask;
  LayerBitstreamStats stats;
  double psnr_el = 0.0;
  RestorationReport restoration;
};

struct BaseLayer {
  ImagePlane decoded;
  ImagePlane upsampled;
  double rate_bits = 0.0;
};

/// Downsample, code with the stub, upsample back to EL resolution.
BaseLayer code_base_layer(const ImagePlane& image, const CodecConfig& cfg);

/// Reference enhancement layer: every block coded predictively from bl_up.
CodedPlane code_full_el(const ImagePlane& image, const ImagePlane& bl_up,
                        const CodecConfig& cfg);

/// Two-layer run with a precomputed, codec-block-aligned epitome mask.
PipelineResult run_pipeline(const ImagePlane& image, const Mask& epitome_mask,
                            const CodecConfig& cfg, const RestorationParams& params);

/// Full run: epitome generation on `image` with `options`, then as above.
PipelineResult run_pipeline(const ImagePlane& image, const EpitomeOptions& options,
                            const CodecConfig& cfg, const RestorationParams& params);

/// {bl_rate, el_rate, mask_bits, epitome_fraction, psnr_el, ...}
nlohmann::json stats_to_json(const PipelineResult& result);

}  // namespace epitome
