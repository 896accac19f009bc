#include "vcs/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace vcs {

namespace {

std::uint8_t quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(255.0 * c + 0.5));
}

}  // namespace

std::vector<std::string> export_pgm_ppm(const VideoCube& cube, const std::string& dir,
                                        const std::string& prefix) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory \"" + dir + "\": " + ec.message());

  const bool color = cube.colorspace == ColorSpace::rgb;
  std::vector<std::string> paths;
  for (int f = 0; f < cube.t; ++f) {
    std::ostringstream name;
    name << prefix << "_";
    name.width(3);
    name.fill('0');
    name << f;
    name << (color ? ".ppm" : ".pgm");
    const std::string path = (std::filesystem::path(dir) / name.str()).string();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open \"" + path + "\" for writing");
    out << (color ? "P6" : "P5") << "\n" << cube.w << " " << cube.h << "\n255\n";
    for (int y = 0; y < cube.h; ++y) {
      for (int x = 0; x < cube.w; ++x) {
        for (int c = 0; c < cube.channels(); ++c) {
          out.put(static_cast<char>(quantize(cube.at(x, y, f, c))));
        }
      }
    }
    if (!out) throw IoError("write failed for \"" + path + "\"");
    paths.push_back(path);
  }
  return paths;
}

namespace {

Image8 load_pnm(const std::string& path, const char* magic, int channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + path + "\" for reading");
  std::string m;
  in >> m;
  if (m != magic) throw ParseError("\"" + path + "\": expected " + magic + " header");
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (!in || w < 1 || h < 1 || maxval != 255) {
    throw ParseError("\"" + path + "\": unsupported PNM header");
  }
  in.get();  // single whitespace after maxval
  Image8 img;
  img.w = w;
  img.h = h;
  img.channels = channels;
  img.data.resize(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
    throw ParseError("\"" + path + "\": truncated pixel data");
  }
  return img;
}

}  // namespace

Image8 load_pgm(const std::string& path) { return load_pnm(path, "P5", 1); }

Image8 load_ppm(const std::string& path) { return load_pnm(path, "P6", 3); }

}  // namespace vcs
