#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vcs/common.hpp"

namespace vcs {

// Cubes are stored row-major over their declared (W,H,T[,3]) dims: at pixel
// (x,y) the T frame values are contiguous, which is the access pattern of the
// forward model and the projection step.

enum class MaskKind { binary, continuous };
enum class ColorSpace { gray, rgb };

/// Modulation masks M, W x H x T transmittance values in [0,1].
struct MaskCube {
  int w = 0, h = 0, t = 0;
  MaskKind kind = MaskKind::binary;
  std::vector<double> data;

  MaskCube() = default;
  MaskCube(int w_, int h_, int t_, MaskKind kind_);

  std::size_t index(int x, int y, int frame) const {
    return (static_cast<std::size_t>(x) * h + y) * t + frame;
  }
  double at(int x, int y, int frame) const { return data[index(x, y, frame)]; }
  double& at(int x, int y, int frame) { return data[index(x, y, frame)]; }
};

/// Video frames, W x H x T (gray) or W x H x T x 3 (rgb), intensities in [0,1].
struct VideoCube {
  int w = 0, h = 0, t = 0;
  ColorSpace colorspace = ColorSpace::gray;
  std::vector<double> data;

  VideoCube() = default;
  VideoCube(int w_, int h_, int t_, ColorSpace cs = ColorSpace::gray);

  int channels() const { return colorspace == ColorSpace::rgb ? 3 : 1; }
  std::size_t index(int x, int y, int frame, int c = 0) const {
    return ((static_cast<std::size_t>(x) * h + y) * t + frame) *
               static_cast<std::size_t>(channels()) +
           c;
  }
  double at(int x, int y, int frame, int c = 0) const { return data[index(x, y, frame, c)]; }
  double& at(int x, int y, int frame, int c = 0) { return data[index(x, y, frame, c)]; }
};

/// The compressed 2D snapshot Y, W x H, values accumulate to [0,T].
struct Measurement {
  int w = 0, h = 0;
  double noise_sigma = 0.0;
  std::vector<double> data;

  Measurement() = default;
  Measurement(int w_, int h_);

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(x) * h + y; }
  double at(int x, int y) const { return data[index(x, y)]; }
  double& at(int x, int y) { return data[index(x, y)]; }
};

/// Normalized measurement and the reference measurement frames derived from it.
struct RefFrames {
  int w = 0, h = 0;
  std::vector<double> normalized;  // W x H, same indexing as Measurement
  VideoCube rmf;                   // rmf(:,:,t) = normalized .* M(:,:,t)
};

std::string shape_string(const MaskCube& m);
std::string shape_string(const VideoCube& v);
std::string shape_string(const Measurement& y);

void require_same_shape(const VideoCube& x, const MaskCube& m, const char* where);
void require_same_shape(const Measurement& y, const MaskCube& m, const char* where);

}  // namespace vcs
