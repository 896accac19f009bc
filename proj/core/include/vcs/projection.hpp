#pragma once

#include "vcs/cube.hpp"

namespace vcs {

/// Diagonal of Phi*Phi^T: Q_i = sum_t M(:,:,t)_i^2 per pixel.
struct QDiagonal {
  int w = 0, h = 0;
  std::vector<double> q;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(x) * h + y; }
  double at(int x, int y) const { return q[index(x, y)]; }
};

QDiagonal q_diagonal(const MaskCube& m);

/// Euclidean projection of v onto {x : Phi x = y}, using the diagonal
/// structure of Phi*Phi^T:
///   x(:,:,t) = v(:,:,t) + M(:,:,t) .* r,  r_i = (y_i - sum_t M_i v_i) / Q_i.
/// Pixels with Q_i <= eps keep v unchanged (pseudo-inverse convention).
/// The result is not clipped.
VideoCube gap_project(const VideoCube& v, const Measurement& y, const MaskCube& m);
VideoCube gap_project(const VideoCube& v, const Measurement& y, const MaskCube& m,
                      const QDiagonal& q);

/// Small dense row-major matrix, used only by the sensing-matrix oracle.
struct DenseMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
};

/// Vectorization order shared by dense_phi and the vec_* helpers: within a
/// frame, i = row * W + col; frames stack as t * W * H + i.
std::size_t vec_pixel_index(const MaskCube& m, int x, int y);
std::vector<double> vec_video(const VideoCube& v);
std::vector<double> vec_measurement(const Measurement& y);
VideoCube unvec_video(const std::vector<double>& v, int w, int h, int t);

/// The explicit sensing matrix Phi = [Diag(vec M_1), ..., Diag(vec M_T)],
/// WH x WHT. Test oracle only; guarded to WHT <= 2^16.
DenseMatrix dense_phi(const MaskCube& m);

}  // namespace vcs
