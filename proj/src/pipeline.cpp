#include "epitome/pipeline.hpp"

#include <cmath>

#include "epitome/resample.hpp"

namespace epitome {

BaseLayer code_base_layer(const ImagePlane& image, const CodecConfig& cfg) {
  const CodedPlane coded = code_plane(downsample_2x(image), cfg);
  return {coded.decoded, upsample_2x(coded.decoded), coded.rate_bits};
}

CodedPlane code_full_el(const ImagePlane& image, const ImagePlane& bl_up,
                        const CodecConfig& cfg) {
  return code_residual(image, bl_up, cfg,
                       Mask::Constant(image.height(), image.width(), true));
}

PipelineResult run_pipeline(const ImagePlane& image, const Mask& epitome_mask,
                            const CodecConfig& cfg, const RestorationParams& params) {
  cfg.validate();
  params.validate();
  const int unit = 2 * cfg.transform_block;
  if (image.width() % unit != 0 || image.height() % unit != 0) {
    throw ShapeError("pipeline: dimensions must be multiples of twice the transform block");
  }
  if (epitome_mask.rows() != image.height() || epitome_mask.cols() != image.width()) {
    throw ShapeError("pipeline: epitome mask does not match image");
  }

  PipelineResult out;
  BaseLayer bl = code_base_layer(image, cfg);
  out.decoded_bl = std::move(bl.decoded);
  out.bl_up = std::move(bl.upsampled);
  out.epitome_mask = epitome_mask;

  const ImagePlane el_input =
      assemble_el(image, epitome_mask, out.bl_up, cfg.transform_block);
  const CodedPlane el = code_residual(el_input, out.bl_up, cfg, epitome_mask);
  out.el_epitome_plane = el.decoded;
  out.restored_el =
      restore_el(out.bl_up, out.el_epitome_plane, epitome_mask, params, &out.restoration);

  const int blocks = (image.width() / cfg.transform_block) *
                     (image.height() / cfg.transform_block);
  out.stats.bl_rate = bl.rate_bits;
  out.stats.el_rate = el.rate_bits;
  out.stats.mask_bits = blocks;
  out.stats.coded_block_count = el.coded_blocks;
  out.stats.epitome_fraction =
      100.0 * static_cast<double>(epitome_mask.count()) / static_cast<double>(image.size());
  out.psnr_el = psnr(image, out.restored_el, image.peak());
  return out;
}

PipelineResult run_pipeline(const ImagePlane& image, const EpitomeOptions& options,
                            const CodecConfig& cfg, const RestorationParams& params) {
  EpitomeOptions aligned = options;
  aligned.codec_block = cfg.transform_block;
  const GeneratedEpitome generated = generate_epitome(image, aligned);
  return run_pipeline(image, generated.padded.mask(), cfg, params);
}

nlohmann::json stats_to_json(const PipelineResult& result) {
  const auto& s = result.stats;
  const double pixels = static_cast<double>(result.restored_el.size());
  nlohmann::json j;
  j["bl_rate"] = s.bl_rate;
  j["el_rate"] = s.el_rate;
  j["mask_bits"] = s.mask_bits;
  j["total_rate"] = s.total_rate();
  j["total_bpp"] = s.total_rate() / pixels;
  j["coded_block_count"] = s.coded_block_count;
  j["epitome_fraction"] = s.epitome_fraction;
  // JSON has no infinity; a lossless EL reports null.
  j["psnr_el"] = std::isfinite(result.psnr_el) ? nlohmann::json(result.psnr_el)
                                               : nlohmann::json(nullptr);
  j["width"] = result.restored_el.width();
  j["height"] = result.restored_el.height();
  j["restored_patches"] = result.restoration.processed_patches;
  j["degraded_patches"] = result.restoration.degraded_patches;
  return j;
}

}  // namespace epitome
