#include "vcs/sensing.hpp"

#include <random>

namespace vcs {

MaskCube generate_masks(int w, int h, int t, std::uint64_t seed, MaskKind kind) {
  MaskCube m(w, h, t, kind);
  std::mt19937_64 rng(seed);
  if (kind == MaskKind::binary) {
    std::bernoulli_distribution bit(0.5);
    for (double& v : m.data) v = bit(rng) ? 1.0 : 0.0;
  } else {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& v : m.data) v = uni(rng);
  }
  return m;
}

Measurement forward_measure(const VideoCube& x, const MaskCube& m, double noise_sigma,
                            std::uint64_t noise_seed) {
  if (x.colorspace != ColorSpace::gray) {
    throw DimensionError("forward_measure: expects a grayscale cube");
  }
  require_same_shape(x, m, "forward_measure");
  if (noise_sigma < 0.0) throw DimensionError("forward_measure: noise_sigma must be >= 0");

  Measurement y(m.w, m.h);
  y.noise_sigma = noise_sigma;
  const std::size_t pixels = y.data.size();
  const int t = m.t;
  for (std::size_t i = 0; i < pixels; ++i) {
    const double* xs = &x.data[i * t];
    const double* ms = &m.data[i * t];
    double acc = 0.0;
    for (int f = 0; f < t; ++f) acc += xs[f] * ms[f];
    y.data[i] = acc;
  }
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : y.data) v += noise(rng);
  }
  return y;
}

std::vector<double> normalized_measurement(const Measurement& y, const MaskCube& m) {
  require_same_shape(y, m, "normalized_measurement");
  std::vector<double> out(y.data.size(), 0.0);
  const int t = m.t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* ms = &m.data[i * t];
    double sum = 0.0;
    for (int f = 0; f < t; ++f) sum += ms[f];
    if (sum > kCoverageEps) out[i] = y.data[i] / sum;
  }
  return out;
}

RefFrames reference_frames(const Measurement& y, const MaskCube& m) {
  RefFrames rf;
  rf.w = m.w;
  rf.h = m.h;
  rf.normalized = normalized_measurement(y, m);
  rf.rmf = VideoCube(m.w, m.h, m.t, ColorSpace::gray);
  const int t = m.t;
  for (std::size_t i = 0; i < rf.normalized.size(); ++i) {
    const double nv = rf.normalized[i];
    const double* ms = &m.data[i * t];
    double* out = &rf.rmf.data[i * t];
    for (int f = 0; f < t; ++f) out[f] = nv * ms[f];
  }
  return rf;
}

VideoCube bayer_mosaic(const VideoCube& x_rgb) {
  if (x_rgb.colorspace != ColorSpace::rgb) {
    throw DimensionError("bayer_mosaic: expects an rgb cube");
  }
  if (x_rgb.w % 2 != 0 || x_rgb.h % 2 != 0) {
    throw DimensionError("bayer_mosaic: W and H must be even, got " + shape_string(x_rgb));
  }
  VideoCube out(x_rgb.w, x_rgb.h, x_rgb.t, ColorSpace::gray);
  for (int x = 0; x < x_rgb.w; ++x) {
    for (int y = 0; y < x_rgb.h; ++y) {
      // RGGB: rows alternate R G / G B starting at the origin.
      int c;
      if (y % 2 == 0) {
        c = (x % 2 == 0) ? 0 : 1;
      } else {
        c = (x % 2 == 0) ? 1 : 2;
      }
      for (int f = 0; f < x_rgb.t; ++f) out.at(x, y, f) = x_rgb.at(x, y, f, c);
    }
  }
  return out;
}

Measurement forward_measure_color(const VideoCube& x_rgb, const MaskCube& m, double noise_sigma,
                                  std::uint64_t noise_seed) {
  if (x_rgb.w != m.w || x_rgb.h != m.h || x_rgb.t != m.t) {
    throw DimensionError("forward_measure_color: video " + shape_string(x_rgb) + " vs mask " +
                         shape_string(m));
  }
  return forward_measure(bayer_mosaic(x_rgb), m, noise_sigma, noise_seed);
}

}  // namespace vcs
