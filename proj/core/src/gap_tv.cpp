#include "vcs/gap_tv.hpp"

#include <algorithm>
#include <cmath>

#include "vcs/common.hpp"
#include "vcs/sensing.hpp"

namespace vcs {

void GapTvConfig::validate() const {
  if (iters < 1) throw DimensionError("GapTvConfig: iters must be >= 1");
  if (!(tv_weight > 0.0)) throw DimensionError("GapTvConfig: tv_weight must be > 0");
  if (tv_inner_iters < 1) throw DimensionError("GapTvConfig: tv_inner_iters must be >= 1");
}

namespace {

// One frame of the cube as a dense W x H scratch image (frame values are
// strided by T in the cube layout).
void load_frame(const VideoCube& v, int f, std::vector<double>& img) {
  img.resize(static_cast<std::size_t>(v.w) * v.h);
  for (int x = 0; x < v.w; ++x)
    for (int y = 0; y < v.h; ++y) img[static_cast<std::size_t>(x) * v.h + y] = v.at(x, y, f);
}

void store_frame(VideoCube& v, int f, const std::vector<double>& img) {
  for (int x = 0; x < v.w; ++x)
    for (int y = 0; y < v.h; ++y) v.at(x, y, f) = img[static_cast<std::size_t>(x) * v.h + y];
}

// z = f - lambda * div p with p constrained per mode; p updated by projected
// gradient steps p <- P(p + (1/8) * grad(div p - f/lambda)).
void denoise_frame(std::vector<double>& img, int w, int h, const GapTvConfig& cfg) {
  const double lambda = cfg.tv_weight;
  const std::size_t n = img.size();
  std::vector<double> p1(n, 0.0), p2(n, 0.0), divp(n, 0.0), u(n, 0.0);
  auto idx = [h](int x, int y) { return static_cast<std::size_t>(x) * h + y; };

  for (int it = 0; it < cfg.tv_inner_iters; ++it) {
    // div p with the adjoint boundary convention of forward differences
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        double d = 0.0;
        if (x < w - 1) d += p1[idx(x, y)];
        if (x > 0) d -= p1[idx(x - 1, y)];
        if (y < h - 1) d += p2[idx(x, y)];
        if (y > 0) d -= p2[idx(x, y - 1)];
        divp[idx(x, y)] = d;
        u[idx(x, y)] = d - img[idx(x, y)] / lambda;
      }
    }
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        const double gx = (x < w - 1) ? u[idx(x + 1, y)] - u[idx(x, y)] : 0.0;
        const double gy = (y < h - 1) ? u[idx(x, y + 1)] - u[idx(x, y)] : 0.0;
        double a = p1[idx(x, y)] + 0.125 * gx;
        double b = p2[idx(x, y)] + 0.125 * gy;
        if (cfg.tv_mode == TvMode::anisotropic) {
          p1[idx(x, y)] = std::clamp(a, -1.0, 1.0);
          p2[idx(x, y)] = std::clamp(b, -1.0, 1.0);
        } else {
          const double norm = std::sqrt(a * a + b * b);
          const double scale = norm > 1.0 ? 1.0 / norm : 1.0;
          p1[idx(x, y)] = a * scale;
          p2[idx(x, y)] = b * scale;
        }
      }
    }
  }

  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      double d = 0.0;
      if (x < w - 1) d += p1[idx(x, y)];
      if (x > 0) d -= p1[idx(x - 1, y)];
      if (y < h - 1) d += p2[idx(x, y)];
      if (y > 0) d -= p2[idx(x, y - 1)];
      img[idx(x, y)] -= lambda * d;
    }
  }
}

double frame_tv(const std::vector<double>& img, int w, int h, TvMode mode) {
  auto idx = [h](int x, int y) { return static_cast<std::size_t>(x) * h + y; };
  double tv = 0.0;
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      const double gx = (x < w - 1) ? img[idx(x + 1, y)] - img[idx(x, y)] : 0.0;
      const double gy = (y < h - 1) ? img[idx(x, y + 1)] - img[idx(x, y)] : 0.0;
      tv += mode == TvMode::anisotropic ? std::abs(gx) + std::abs(gy)
                                        : std::sqrt(gx * gx + gy * gy);
    }
  }
  return tv;
}

}  // namespace

VideoCube tv_denoise(const VideoCube& x, const GapTvConfig& cfg) {
  cfg.validate();
  if (x.colorspace != ColorSpace::gray) throw DimensionError("tv_denoise: expects grayscale");
  VideoCube out = x;
  parallel_for(x.t, [&](std::int64_t begin, std::int64_t end) {
    std::vector<double> img;
    for (std::int64_t f = begin; f < end; ++f) {
      load_frame(x, static_cast<int>(f), img);
      denoise_frame(img, x.w, x.h, cfg);
      store_frame(out, static_cast<int>(f), img);
    }
  });
  return out;
}

double tv_objective(const VideoCube& z, const VideoCube& x, const GapTvConfig& cfg) {
  if (z.w != x.w || z.h != x.h || z.t != x.t) {
    throw DimensionError("tv_objective: shape mismatch " + shape_string(z) + " vs " +
                         shape_string(x));
  }
  double fidelity = 0.0;
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    const double d = z.data[i] - x.data[i];
    fidelity += d * d;
  }
  double tv = 0.0;
  std::vector<double> img;
  for (int f = 0; f < z.t; ++f) {
    load_frame(z, f, img);
    tv += frame_tv(img, z.w, z.h, cfg.tv_mode);
  }
  return 0.5 * fidelity + cfg.tv_weight * tv;
}

VideoCube gap_tv_reconstruct(const Measurement& y, const MaskCube& m, const GapTvConfig& cfg) {
  cfg.validate();
  require_same_shape(y, m, "gap_tv_reconstruct");
  const QDiagonal q = q_diagonal(m);
  VideoCube v = reference_frames(y, m).rmf;
  for (int it = 0; it < cfg.iters; ++it) {
    VideoCube x = gap_project(v, y, m, q);
    v = tv_denoise(x, cfg);
  }
  for (double& val : v.data) val = std::clamp(val, 0.0, 1.0);
  return v;
}

}  // namespace vcs
