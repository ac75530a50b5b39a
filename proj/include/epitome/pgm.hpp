#pragma once

#include <filesystem>

#include "epitome/image.hpp"

namespace epitome {

/// Reads a binary PGM (P5) or PPM (P6). Color input is converted to luma with
/// BT.601 weights. The plane's peak is the file's maxval.
ImagePlane read_pnm(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM. Samples are rounded and clamped to [0, 255].
void write_pgm(const std::filesystem::path& path, const ImagePlane& plane);

/// Mask <-> PGM with 0 / 255 samples. Reading treats any nonzero sample as set.
Mask read_mask_pgm(const std::filesystem::path& path);
void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);

}  // namespace epitome
