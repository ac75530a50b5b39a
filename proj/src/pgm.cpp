#include "epitome/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace epitome {
namespace {

// Skips whitespace and '#' comments between header tokens.
int read_header_int(std::istream& in) {
  while (true) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  if (!(in >> value) || value <= 0) throw InputError("pnm: malformed header");
  return value;
}

}  // namespace

ImagePlane read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5" && magic != "P6") {
    throw InputError(path.string() + ": only binary PGM/PPM (P5/P6) is supported");
  }
  const int width = read_header_int(in);
  const int height = read_header_int(in);
  const int maxval = read_header_int(in);
  if (maxval > 65535) throw InputError("pnm: maxval out of range");
  in.get();  // single whitespace before raster

  const int channels = magic == "P6" ? 3 : 1;
  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(count * bytes_per_sample);
  if (!in.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(raw.size()))) {
    throw InputError(path.string() + ": truncated raster");
  }
  auto sample = [&](std::size_t i) -> double {
    if (bytes_per_sample == 1) return raw[i];
    return static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
  };

  ImagePlane plane(width, height, 0.0, static_cast<double>(maxval));
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t p = (static_cast<std::size_t>(r) * width + c) * channels;
      plane(r, c) = channels == 1 ? sample(p)
                                  : 0.299 * sample(p) + 0.587 * sample(p + 1) +
                                        0.114 * sample(p + 2);
    }
  }
  return plane;
}

void write_pgm(const std::filesystem::path& path, const ImagePlane& plane) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << plane.width() << ' ' << plane.height() << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(plane.size()));
  std::size_t i = 0;
  for (int r = 0; r < plane.height(); ++r) {
    for (int c = 0; c < plane.width(); ++c) {
      raw[i++] = static_cast<unsigned char>(
          std::clamp(std::lround(plane(r, c)), 0L, 255L));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
}

Mask read_mask_pgm(const std::filesystem::path& path) {
  const ImagePlane plane = read_pnm(path);
  return plane.samples() > 0.0;
}

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
  ImagePlane plane(mask.select(ImagePlane::Samples::Constant(mask.rows(), mask.cols(), 255.0),
                               ImagePlane::Samples::Zero(mask.rows(), mask.cols())));
  write_pgm(path, plane);
}

}  // namespace epitome
