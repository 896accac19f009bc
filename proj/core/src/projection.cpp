#include "vcs/projection.hpp"

#include "vcs/sensing.hpp"

namespace vcs {

QDiagonal q_diagonal(const MaskCube& m) {
  QDiagonal qd;
  qd.w = m.w;
  qd.h = m.h;
  qd.q.assign(static_cast<std::size_t>(m.w) * m.h, 0.0);
  const int t = m.t;
  for (std::size_t i = 0; i < qd.q.size(); ++i) {
    const double* ms = &m.data[i * t];
    double acc = 0.0;
    for (int f = 0; f < t; ++f) acc += ms[f] * ms[f];
    qd.q[i] = acc;
  }
  return qd;
}

VideoCube gap_project(const VideoCube& v, const Measurement& y, const MaskCube& m) {
  return gap_project(v, y, m, q_diagonal(m));
}

VideoCube gap_project(const VideoCube& v, const Measurement& y, const MaskCube& m,
                      const QDiagonal& q) {
  require_same_shape(v, m, "gap_project");
  require_same_shape(y, m, "gap_project");
  if (v.colorspace != ColorSpace::gray) {
    throw DimensionError("gap_project: expects a grayscale cube");
  }

  VideoCube x(v.w, v.h, v.t, ColorSpace::gray);
  const int t = m.t;
  const std::size_t pixels = y.data.size();
  for (std::size_t i = 0; i < pixels; ++i) {
    const double* vs = &v.data[i * t];
    const double* ms = &m.data[i * t];
    double* xs = &x.data[i * t];
    double residual = y.data[i];
    for (int f = 0; f < t; ++f) residual -= ms[f] * vs[f];
    const double r = q.q[i] > kCoverageEps ? residual / q.q[i] : 0.0;
    for (int f = 0; f < t; ++f) xs[f] = vs[f] + ms[f] * r;
  }
  return x;
}

std::size_t vec_pixel_index(const MaskCube& m, int x, int y) {
  return static_cast<std::size_t>(y) * m.w + x;
}

std::vector<double> vec_video(const VideoCube& v) {
  const std::size_t wh = static_cast<std::size_t>(v.w) * v.h;
  std::vector<double> out(wh * v.t);
  for (int f = 0; f < v.t; ++f) {
    for (int y = 0; y < v.h; ++y) {
      for (int x = 0; x < v.w; ++x) {
        out[f * wh + static_cast<std::size_t>(y) * v.w + x] = v.at(x, y, f);
      }
    }
  }
  return out;
}

std::vector<double> vec_measurement(const Measurement& y) {
  std::vector<double> out(y.data.size());
  for (int yy = 0; yy < y.h; ++yy) {
    for (int x = 0; x < y.w; ++x) {
      out[static_cast<std::size_t>(yy) * y.w + x] = y.at(x, yy);
    }
  }
  return out;
}

VideoCube unvec_video(const std::vector<double>& v, int w, int h, int t) {
  const std::size_t wh = static_cast<std::size_t>(w) * h;
  if (v.size() != wh * t) throw DimensionError("unvec_video: element count mismatch");
  VideoCube out(w, h, t, ColorSpace::gray);
  for (int f = 0; f < t; ++f) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(x, y, f) = v[f * wh + static_cast<std::size_t>(y) * w + x];
      }
    }
  }
  return out;
}

DenseMatrix dense_phi(const MaskCube& m) {
  const std::size_t wh = static_cast<std::size_t>(m.w) * m.h;
  const std::size_t wht = wh * m.t;
  if (wht > (1u << 16)) {
    throw CapacityError("dense_phi: WHT = " + std::to_string(wht) + " exceeds 2^16");
  }
  DenseMatrix phi(wh, wht);
  for (int f = 0; f < m.t; ++f) {
    for (int y = 0; y < m.h; ++y) {
      for (int x = 0; x < m.w; ++x) {
        const std::size_t i = vec_pixel_index(m, x, y);
        phi.at(i, f * wh + i) = m.at(x, y, f);
      }
    }
  }
  return phi;
}

}  // namespace vcs
