#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcs/cube.hpp"

namespace vcs {

/// Writes one binary PGM (P5, gray) or PPM (P6, rgb) file per frame into dir,
/// named <prefix>_<frame:03d>.pgm/.ppm. Bytes are round(255*clip(v,0,1)),
/// halves rounding up. Returns the written paths.
std::vector<std::string> export_pgm_ppm(const VideoCube& cube, const std::string& dir,
                                        const std::string& prefix = "frame");

struct Image8 {
  int w = 0, h = 0, channels = 1;
  std::vector<std::uint8_t> data;  // row-major rows, interleaved channels

  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * w + x) * channels + c];
  }
};

Image8 load_pgm(const std::string& path);
Image8 load_ppm(const std::string& path);

}  // namespace vcs
