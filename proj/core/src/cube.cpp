#include "vcs/cube.hpp"

#include <sstream>

namespace vcs {

namespace {

void require_positive(int w, int h, int t, const char* what) {
  if (w < 1 || h < 1 || t < 1) {
    std::ostringstream os;
    os << what << ": dims must be >= 1, got " << w << "x" << h << "x" << t;
    throw DimensionError(os.str());
  }
}

}  // namespace

MaskCube::MaskCube(int w_, int h_, int t_, MaskKind kind_) : w(w_), h(h_), t(t_), kind(kind_) {
  require_positive(w, h, t, "MaskCube");
  data.assign(static_cast<std::size_t>(w) * h * t, 0.0);
}

VideoCube::VideoCube(int w_, int h_, int t_, ColorSpace cs) : w(w_), h(h_), t(t_), colorspace(cs) {
  require_positive(w, h, t, "VideoCube");
  data.assign(static_cast<std::size_t>(w) * h * t * channels(), 0.0);
}

Measurement::Measurement(int w_, int h_) : w(w_), h(h_) {
  require_positive(w, h, 1, "Measurement");
  data.assign(static_cast<std::size_t>(w) * h, 0.0);
}

std::string shape_string(const MaskCube& m) {
  std::ostringstream os;
  os << m.w << "x" << m.h << "x" << m.t;
  return os.str();
}

std::string shape_string(const VideoCube& v) {
  std::ostringstream os;
  os << v.w << "x" << v.h << "x" << v.t;
  if (v.colorspace == ColorSpace::rgb) os << "x3";
  return os.str();
}

std::string shape_string(const Measurement& y) {
  std::ostringstream os;
  os << y.w << "x" << y.h;
  return os.str();
}

void require_same_shape(const VideoCube& x, const MaskCube& m, const char* where) {
  if (x.w != m.w || x.h != m.h || x.t != m.t) {
    throw DimensionError(std::string(where) + ": video " + shape_string(x) + " vs mask " +
                         shape_string(m));
  }
}

void require_same_shape(const Measurement& y, const MaskCube& m, const char* where) {
  if (y.w != m.w || y.h != m.h) {
    throw DimensionError(std::string(where) + ": measurement " + shape_string(y) + " vs mask " +
                         shape_string(m));
  }
}

}  // namespace vcs
