#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "vcs/tensor.hpp"

namespace vcs {

struct Conv3dSpec {
  int stride_t = 1, stride_h = 1, stride_w = 1;
  int pad_t = 0, pad_h = 0, pad_w = 0;
};

namespace detail {

inline int div_ceil(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
inline int div_floor(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// 4D tensors are [C,T,H,W]; a leading batch dim makes them 5D.
template <class T>
std::array<int, 5> as_nc3(const Tensor<T>& x, const char* where) {
  if (x.ndim() == 4) return {1, x.shape[0], x.shape[1], x.shape[2], x.shape[3]};
  if (x.ndim() == 5) return {x.shape[0], x.shape[1], x.shape[2], x.shape[3], x.shape[4]};
  throw DimensionError(std::string(where) + ": expected 4D [C,T,H,W] or 5D [N,C,T,H,W], got " +
                       x.shape_str());
}

}  // namespace detail

/// Cross-correlation over (time, height, width). x: [N?,Ci,T,H,W],
/// w: [Co,Ci,Kt,Kh,Kw], b: [Co]. Output dims floor((in + 2p - k)/s) + 1.
template <class T>
Tensor<T> conv3d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         const Conv3dSpec& sp) {
  const auto [N, Ci, Ti, Hi, Wi] = detail::as_nc3(x, "conv3d");
  if (w.ndim() != 5) throw DimensionError("conv3d: weight must be 5D, got " + w.shape_str());
  const int Co = w.shape[0], Kt = w.shape[2], Kh = w.shape[3], Kw = w.shape[4];
  if (w.shape[1] != Ci) {
    throw DimensionError("conv3d: weight expects " + std::to_string(w.shape[1]) +
                         " input channels, input has " + std::to_string(Ci));
  }
  if (b.ndim() != 1 || b.shape[0] != Co) {
    throw DimensionError("conv3d: bias must be [Co] = [" + std::to_string(Co) + "], got " +
                         b.shape_str());
  }
  const int To = (Ti + 2 * sp.pad_t - Kt) / sp.stride_t + 1;
  const int Ho = (Hi + 2 * sp.pad_h - Kh) / sp.stride_h + 1;
  const int Wo = (Wi + 2 * sp.pad_w - Kw) / sp.stride_w + 1;
  if (Ti + 2 * sp.pad_t < Kt || Hi + 2 * sp.pad_h < Kh || Wi + 2 * sp.pad_w < Kw) {
    throw DimensionError("conv3d: kernel exceeds padded input extent");
  }

  Tensor<T> out(x.ndim() == 4 ? std::vector<int>{Co, To, Ho, Wo}
                              : std::vector<int>{N, Co, To, Ho, Wo});
  const T* xd = x.data.data();
  const T* wd = w.data.data();
  const T* bd = b.data.data();
  T* od = out.data.data();

  const std::int64_t rows = static_cast<std::int64_t>(N) * Co * To * Ho;
  parallel_for(rows, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t row = begin; row < end; ++row) {
      int rem = static_cast<int>(row);
      const int ho = rem % Ho;
      rem /= Ho;
      const int to = rem % To;
      rem /= To;
      const int co = rem % Co;
      const int n = rem / Co;

      T* orow = od + ((static_cast<std::size_t>(n) * Co + co) * To + to) *
                         static_cast<std::size_t>(Ho) * Wo +
                     static_cast<std::size_t>(ho) * Wo;
      for (int wo = 0; wo < Wo; ++wo) orow[wo] = bd[co];

      for (int ci = 0; ci < Ci; ++ci) {
        for (int kt = 0; kt < Kt; ++kt) {
          const int ti = to * sp.stride_t - sp.pad_t + kt;
          if (ti < 0 || ti >= Ti) continue;
          for (int kh = 0; kh < Kh; ++kh) {
            const int hi = ho * sp.stride_h - sp.pad_h + kh;
            if (hi < 0 || hi >= Hi) continue;
            const T* xrow = xd + (((static_cast<std::size_t>(n) * Ci + ci) * Ti + ti) *
                                      static_cast<std::size_t>(Hi) +
                                  hi) *
                                     Wi;
            const T* wrow = wd + (((static_cast<std::size_t>(co) * Ci + ci) * Kt + kt) *
                                      static_cast<std::size_t>(Kh) +
                                  kh) *
                                     Kw;
            for (int kw = 0; kw < Kw; ++kw) {
              const T wv = wrow[kw];
              const int lo = std::max(0, detail::div_ceil(sp.pad_w - kw, sp.stride_w));
              const int hi_w =
                  std::min(Wo - 1, detail::div_floor(Wi - 1 + sp.pad_w - kw, sp.stride_w));
              if (sp.stride_w == 1) {
                const T* xs = xrow - sp.pad_w + kw;
                for (int wo = lo; wo <= hi_w; ++wo) orow[wo] += xs[wo] * wv;
              } else {
                for (int wo = lo; wo <= hi_w; ++wo) {
                  orow[wo] += xrow[wo * sp.stride_w - sp.pad_w + kw] * wv;
                }
              }
            }
          }
        }
      }
    }
  });
  return out;
}

/// Exact gradients of conv3d_forward. Any of the outputs may be null to skip.
template <class T>
void conv3d_backward(const Tensor<T>& x, const Tensor<T>& w, const Conv3dSpec& sp,
                     const Tensor<T>& grad_out, Tensor<T>* grad_x, Tensor<T>* grad_w,
                     Tensor<T>* grad_b) {
  const auto [N, Ci, Ti, Hi, Wi] = detail::as_nc3(x, "conv3d_backward");
  const int Co = w.shape[0], Kt = w.shape[2], Kh = w.shape[3], Kw = w.shape[4];
  const auto [Ng, Cog, To, Ho, Wo] = detail::as_nc3(grad_out, "conv3d_backward");
  if (Ng != N || Cog != Co) {
    throw DimensionError("conv3d_backward: grad_out batch/channels inconsistent with forward");
  }
  const T* xd = x.data.data();
  const T* wd = w.data.data();
  const T* gd = grad_out.data.data();

  if (grad_x != nullptr) {
    if (!grad_x->same_shape(x)) *grad_x = Tensor<T>(x.shape);
    T* gxd = grad_x->data.data();
    const std::int64_t rows = static_cast<std::int64_t>(N) * Ci * Ti * Hi;
    parallel_for(rows, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t row = begin; row < end; ++row) {
        int rem = static_cast<int>(row);
        const int hi = rem % Hi;
        rem /= Hi;
        const int ti = rem % Ti;
        rem /= Ti;
        const int ci = rem % Ci;
        const int n = rem / Ci;

        T* gxrow = gxd + ((static_cast<std::size_t>(n) * Ci + ci) * Ti + ti) *
                             static_cast<std::size_t>(Hi) * Wi +
                         static_cast<std::size_t>(hi) * Wi;
        for (int wi = 0; wi < Wi; ++wi) gxrow[wi] = T(0);

        for (int co = 0; co < Co; ++co) {
          for (int kt = 0; kt < Kt; ++kt) {
            const int tnum = ti + sp.pad_t - kt;
            if (tnum < 0 || tnum % sp.stride_t != 0) continue;
            const int to = tnum / sp.stride_t;
            if (to >= To) continue;
            for (int kh = 0; kh < Kh; ++kh) {
              const int hnum = hi + sp.pad_h - kh;
              if (hnum < 0 || hnum % sp.stride_h != 0) continue;
              const int ho = hnum / sp.stride_h;
              if (ho >= Ho) continue;
              const T* grow = gd + (((static_cast<std::size_t>(n) * Co + co) * To + to) *
                                        static_cast<std::size_t>(Ho) +
                                    ho) *
                                       Wo;
              const T* wrow = wd + (((static_cast<std::size_t>(co) * Ci + ci) * Kt + kt) *
                                        static_cast<std::size_t>(Kh) +
                                    kh) *
                                       Kw;
              for (int kw = 0; kw < Kw; ++kw) {
                const T wv = wrow[kw];
                const int lo = std::max(0, detail::div_ceil(sp.pad_w - kw, sp.stride_w));
                const int hi_w =
                    std::min(Wo - 1, detail::div_floor(Wi - 1 + sp.pad_w - kw, sp.stride_w));
                for (int wo = lo; wo <= hi_w; ++wo) {
                  const int wi = wo * sp.stride_w - sp.pad_w + kw;
                  gxrow[wi] += grow[wo] * wv;
                }
              }
            }
          }
        }
      }
    });
  }

  if (grad_w != nullptr) {
    if (!grad_w->same_shape(w)) *grad_w = Tensor<T>(w.shape);
    T* gwd = grad_w->data.data();
    const std::int64_t rows = static_cast<std::int64_t>(Co) * Ci * Kt * Kh;
    parallel_for(rows, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t row = begin; row < end; ++row) {
        int rem = static_cast<int>(row);
        const int kh = rem % Kh;
        rem /= Kh;
        const int kt = rem % Kt;
        rem /= Kt;
        const int ci = rem % Ci;
        const int co = rem / Ci;

        T* gwrow = gwd + (((static_cast<std::size_t>(co) * Ci + ci) * Kt + kt) *
                              static_cast<std::size_t>(Kh) +
                          kh) *
                             Kw;
        for (int kw = 0; kw < Kw; ++kw) gwrow[kw] = T(0);

        for (int n = 0; n < N; ++n) {
          for (int to = 0; to < To; ++to) {
            const int ti = to * sp.stride_t - sp.pad_t + kt;
            if (ti < 0 || ti >= Ti) continue;
            for (int ho = 0; ho < Ho; ++ho) {
              const int hi = ho * sp.stride_h - sp.pad_h + kh;
              if (hi < 0 || hi >= Hi) continue;
              const T* grow = gd + (((static_cast<std::size_t>(n) * Co + co) * To + to) *
                                        static_cast<std::size_t>(Ho) +
                                    ho) *
                                       Wo;
              const T* xrow = xd + (((static_cast<std::size_t>(n) * Ci + ci) * Ti + ti) *
                                        static_cast<std::size_t>(Hi) +
                                    hi) *
                                       Wi;
              for (int kw = 0; kw < Kw; ++kw) {
                const int lo = std::max(0, detail::div_ceil(sp.pad_w - kw, sp.stride_w));
                const int hi_w =
                    std::min(Wo - 1, detail::div_floor(Wi - 1 + sp.pad_w - kw, sp.stride_w));
                T acc = T(0);
                for (int wo = lo; wo <= hi_w; ++wo) {
                  acc += grow[wo] * xrow[wo * sp.stride_w - sp.pad_w + kw];
                }
                gwrow[kw] += acc;
              }
            }
          }
        }
      }
    });
  }

  if (grad_b != nullptr) {
    if (grad_b->ndim() != 1 || grad_b->shape[0] != Co) *grad_b = Tensor<T>({Co});
    T* gbd = grad_b->data.data();
    const std::size_t plane = static_cast<std::size_t>(To) * Ho * Wo;
    for (int co = 0; co < Co; ++co) {
      T acc = T(0);
      for (int n = 0; n < N; ++n) {
        const T* g = gd + (static_cast<std::size_t>(n) * Co + co) * plane;
        for (std::size_t i = 0; i < plane; ++i) acc += g[i];
      }
      gbd[co] = acc;
    }
  }
}

template <class T>
Tensor<T> leaky_relu_forward(const Tensor<T>& x, T slope) {
  Tensor<T> out(x.shape);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const T v = x.data[i];
    out.data[i] = v >= T(0) ? v : slope * v;
  }
  return out;
}

template <class T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out, T slope) {
  require_same_shape(x, grad_out, "leaky_relu_backward");
  Tensor<T> gx(x.shape);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    gx.data[i] = grad_out.data[i] * (x.data[i] >= T(0) ? T(1) : slope);
  }
  return gx;
}

/// Nearest-neighbor x2 upsampling of the trailing (H,W) dims.
template <class T>
Tensor<T> upsample2x_forward(const Tensor<T>& x) {
  if (x.ndim() < 2) throw DimensionError("upsample2x: needs at least 2 dims");
  const int W = x.shape.back();
  const int H = x.shape[x.ndim() - 2];
  std::vector<int> oshape = x.shape;
  oshape[x.ndim() - 2] = 2 * H;
  oshape.back() = 2 * W;
  Tensor<T> out(oshape);
  const std::size_t planes = x.numel() / (static_cast<std::size_t>(H) * W);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.data.data() + p * H * W;
    T* dst = out.data.data() + p * 4 * H * W;
    for (int h = 0; h < 2 * H; ++h) {
      const T* srow = src + static_cast<std::size_t>(h / 2) * W;
      T* drow = dst + static_cast<std::size_t>(h) * 2 * W;
      for (int w = 0; w < 2 * W; ++w) drow[w] = srow[w / 2];
    }
  }
  return out;
}

/// Backward of nearest-neighbor x2: 2x2 sum-pool of the output gradient.
template <class T>
Tensor<T> upsample2x_backward(const Tensor<T>& grad_out) {
  if (grad_out.ndim() < 2) throw DimensionError("upsample2x_backward: needs at least 2 dims");
  const int W2 = grad_out.shape.back();
  const int H2 = grad_out.shape[grad_out.ndim() - 2];
  if (W2 % 2 != 0 || H2 % 2 != 0) {
    throw DimensionError("upsample2x_backward: trailing dims must be even");
  }
  std::vector<int> ishape = grad_out.shape;
  ishape[grad_out.ndim() - 2] = H2 / 2;
  ishape.back() = W2 / 2;
  Tensor<T> gx(ishape);
  const std::size_t planes = gx.numel() / (static_cast<std::size_t>(H2 / 2) * (W2 / 2));
  for (std::size_t p = 0; p < planes; ++p) {
    const T* g = grad_out.data.data() + p * H2 * W2;
    T* dst = gx.data.data() + p * (H2 / 2) * (W2 / 2);
    for (int h = 0; h < H2 / 2; ++h) {
      for (int w = 0; w < W2 / 2; ++w) {
        const T* r0 = g + static_cast<std::size_t>(2 * h) * W2 + 2 * w;
        const T* r1 = r0 + W2;
        dst[static_cast<std::size_t>(h) * (W2 / 2) + w] = r0[0] + r0[1] + r1[0] + r1[1];
      }
    }
  }
  return gx;
}

}  // namespace vcs
