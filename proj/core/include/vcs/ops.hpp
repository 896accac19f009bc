#pragma once

#include "vcs/kernels.hpp"
#include "vcs/tape.hpp"

namespace vcs {

namespace detail {

template <class T>
int channel_dim(const Tensor<T>& x, const char* where) {
  if (x.ndim() == 4) return 0;
  if (x.ndim() == 5) return 1;
  throw DimensionError(std::string(where) + ": expected 4D or 5D tensor, got " + x.shape_str());
}

}  // namespace detail

template <class T>
int op_conv3d(Tape<T>& tape, int x, int w, int b, Conv3dSpec spec) {
  Tensor<T> value = conv3d_forward(tape.val(x), tape.val(w), tape.val(b), spec);
  return tape.make_node(
      "conv3d", std::move(value), {x, w, b}, [x, w, b, spec](Tape<T>& t, int id) {
        const Tensor<T>& gout = t.grad(id);
        Tensor<T> gx, gw, gb;
        const bool need_x = t.requires_grad(x);
        const bool need_w = t.requires_grad(w);
        const bool need_b = t.requires_grad(b);
        conv3d_backward(t.val(x), t.val(w), spec, gout, need_x ? &gx : nullptr,
                        need_w ? &gw : nullptr, need_b ? &gb : nullptr);
        if (need_x) t.accumulate(x, gx);
        if (need_w) t.accumulate(w, gw);
        if (need_b) t.accumulate(b, gb);
      });
}

template <class T>
int op_leaky_relu(Tape<T>& tape, int x, T slope = T(0.01)) {
  Tensor<T> value = leaky_relu_forward(tape.val(x), slope);
  return tape.make_node("leaky_relu", std::move(value), {x}, [x, slope](Tape<T>& t, int id) {
    t.accumulate(x, leaky_relu_backward(t.val(x), t.grad(id), slope));
  });
}

template <class T>
int op_upsample2x(Tape<T>& tape, int x) {
  Tensor<T> value = upsample2x_forward(tape.val(x));
  return tape.make_node("upsample2x", std::move(value), {x}, [x](Tape<T>& t, int id) {
    t.accumulate(x, upsample2x_backward(t.grad(id)));
  });
}

template <class T>
int op_add(Tape<T>& tape, int a, int b) {
  const Tensor<T>& av = tape.val(a);
  const Tensor<T>& bv = tape.val(b);
  require_same_shape(av, bv, "op_add");
  Tensor<T> value(av.shape);
  for (std::size_t i = 0; i < value.numel(); ++i) value.data[i] = av.data[i] + bv.data[i];
  return tape.make_node("add", std::move(value), {a, b}, [a, b](Tape<T>& t, int id) {
    t.accumulate(a, t.grad(id));
    t.accumulate(b, t.grad(id));
  });
}

template <class T>
int op_sub(Tape<T>& tape, int a, int b) {
  const Tensor<T>& av = tape.val(a);
  const Tensor<T>& bv = tape.val(b);
  require_same_shape(av, bv, "op_sub");
  Tensor<T> value(av.shape);
  for (std::size_t i = 0; i < value.numel(); ++i) value.data[i] = av.data[i] - bv.data[i];
  return tape.make_node("sub", std::move(value), {a, b}, [a, b](Tape<T>& t, int id) {
    t.accumulate(a, t.grad(id));
    if (!t.requires_grad(b)) return;
    Tensor<T> neg = t.grad(id);
    for (T& v : neg.data) v = -v;
    t.accumulate(b, neg);
  });
}

template <class T>
int op_scale(Tape<T>& tape, int a, T s) {
  Tensor<T> value = tape.val(a);
  for (T& v : value.data) v *= s;
  return tape.make_node("scale", std::move(value), {a}, [a, s](Tape<T>& t, int id) {
    Tensor<T> g = t.grad(id);
    for (T& v : g.data) v *= s;
    t.accumulate(a, g);
  });
}

/// Concatenation along the channel dim (dim 0 for 4D, dim 1 for 5D).
template <class T>
int op_concat_channels(Tape<T>& tape, const std::vector<int>& xs) {
  if (xs.empty()) throw DimensionError("concat_channels: empty input list");
  const Tensor<T>& first = tape.val(xs[0]);
  const int cdim = detail::channel_dim(first, "concat_channels");
  std::vector<int> oshape = first.shape;
  int channels = 0;
  for (int id : xs) {
    const Tensor<T>& v = tape.val(id);
    if (v.ndim() != first.ndim()) {
      throw DimensionError("concat_channels: rank mismatch " + v.shape_str() + " vs " +
                           first.shape_str());
    }
    for (int d = 0; d < v.ndim(); ++d) {
      if (d != cdim && v.shape[d] != first.shape[d]) {
        throw DimensionError("concat_channels: non-channel dims differ, " + v.shape_str() +
                             " vs " + first.shape_str());
      }
    }
    channels += v.shape[cdim];
  }
  oshape[cdim] = channels;

  std::size_t outer = 1;
  for (int d = 0; d < cdim; ++d) outer *= static_cast<std::size_t>(first.shape[d]);
  std::size_t inner = 1;
  for (int d = cdim + 1; d < first.ndim(); ++d) inner *= static_cast<std::size_t>(first.shape[d]);

  Tensor<T> value(oshape);
  std::size_t coffset = 0;
  for (int id : xs) {
    const Tensor<T>& v = tape.val(id);
    const std::size_t c = static_cast<std::size_t>(v.shape[cdim]);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(v.data.data() + o * c * inner, c * inner,
                  value.data.data() + (o * channels + coffset) * inner);
    }
    coffset += c;
  }

  return tape.make_node(
      "concat_channels", std::move(value), xs,
      [xs, outer, inner, channels, cdim](Tape<T>& t, int id) {
        const Tensor<T>& g = t.grad(id);
        std::size_t coffset = 0;
        for (int input : xs) {
          const Tensor<T>& v = t.val(input);
          const std::size_t c = static_cast<std::size_t>(v.shape[cdim]);
          if (t.requires_grad(input)) {
            Tensor<T> gi(v.shape);
            for (std::size_t o = 0; o < outer; ++o) {
              std::copy_n(g.data.data() + (o * channels + coffset) * inner, c * inner,
                          gi.data.data() + o * c * inner);
            }
            t.accumulate(input, gi);
          }
          coffset += c;
        }
      });
}

/// Channel slice [c0, c1) along the channel dim.
template <class T>
int op_slice_channels(Tape<T>& tape, int x, int c0, int c1) {
  const Tensor<T>& v = tape.val(x);
  const int cdim = detail::channel_dim(v, "slice_channels");
  const int c = v.shape[cdim];
  if (c0 < 0 || c1 > c || c0 >= c1) throw DimensionError("slice_channels: bad channel range");
  std::size_t outer = 1;
  for (int d = 0; d < cdim; ++d) outer *= static_cast<std::size_t>(v.shape[d]);
  std::size_t inner = 1;
  for (int d = cdim + 1; d < v.ndim(); ++d) inner *= static_cast<std::size_t>(v.shape[d]);

  std::vector<int> oshape = v.shape;
  oshape[cdim] = c1 - c0;
  Tensor<T> value(oshape);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(v.data.data() + (o * c + c0) * inner, static_cast<std::size_t>(c1 - c0) * inner,
                value.data.data() + o * (c1 - c0) * inner);
  }
  return tape.make_node("slice_channels", std::move(value), {x},
                        [x, c0, c1, c, outer, inner](Tape<T>& t, int id) {
                          const Tensor<T>& g = t.grad(id);
                          Tensor<T> gx(t.val(x).shape);
                          for (std::size_t o = 0; o < outer; ++o) {
                            std::copy_n(g.data.data() + o * (c1 - c0) * inner,
                                        static_cast<std::size_t>(c1 - c0) * inner,
                                        gx.data.data() + (o * c + c0) * inner);
                          }
                          t.accumulate(x, gx);
                        });
}

/// Mean squared error over all elements: matches the training loss
/// normalization 1/(c*T*W*H) per sample (the batch factor is applied by
/// seeding backward with 1/B).
template <class T>
int op_mse(Tape<T>& tape, int pred, int target) {
  const Tensor<T>& p = tape.val(pred);
  const Tensor<T>& q = tape.val(target);
  require_same_shape(p, q, "op_mse");
  T acc = T(0);
  for (std::size_t i = 0; i < p.numel(); ++i) {
    const T d = p.data[i] - q.data[i];
    acc += d * d;
  }
  Tensor<T> value({1});
  value.data[0] = acc / static_cast<T>(p.numel());
  return tape.make_node("mse", std::move(value), {pred, target},
                        [pred, target](Tape<T>& t, int id) {
                          const T g = t.grad(id).data[0];
                          const Tensor<T>& p = t.val(pred);
                          const Tensor<T>& q = t.val(target);
                          const T scale = g * T(2) / static_cast<T>(p.numel());
                          Tensor<T> gp(p.shape);
                          for (std::size_t i = 0; i < p.numel(); ++i) {
                            gp.data[i] = scale * (p.data[i] - q.data[i]);
                          }
                          if (t.requires_grad(pred)) t.accumulate(pred, gp);
                          if (t.requires_grad(target)) {
                            for (T& v : gp.data) v = -v;
                            t.accumulate(target, gp);
                          }
                        });
}

/// alpha * a + b, elementwise. Used to combine per-stage losses.
template <class T>
int op_axpy(Tape<T>& tape, T alpha, int a, int b) {
  const Tensor<T>& av = tape.val(a);
  const Tensor<T>& bv = tape.val(b);
  require_same_shape(av, bv, "op_axpy");
  Tensor<T> value(av.shape);
  for (std::size_t i = 0; i < value.numel(); ++i) {
    value.data[i] = alpha * av.data[i] + bv.data[i];
  }
  return tape.make_node("axpy", std::move(value), {a, b}, [alpha, a, b](Tape<T>& t, int id) {
    if (t.requires_grad(a)) {
      Tensor<T> g = t.grad(id);
      for (T& v : g.data) v *= alpha;
      t.accumulate(a, g);
    }
    t.accumulate(b, t.grad(id));
  });
}

/// Tensor-level system inputs of one measurement: everything the projection
/// step needs, precomputed once per (mask, measurement) pair.
/// mask: [1,T,H,W]; y, qinv: [1,1,H,W] with qinv_i = 1/Q_i or 0.
template <class T>
struct SensingSystem {
  Tensor<T> mask;
  Tensor<T> y;
  Tensor<T> qinv;
};

/// GAP projection as a differentiable op on [1,T,H,W] estimates:
///   x_t = v_t + m_t * r,   r = (y - sum_t m_t v_t) * qinv.
/// The Jacobian is the projector itself, so backward is the same stencil with
/// y = 0: g_v = g - m * (sum_t m_t g_t) * qinv.
template <class T>
int op_gap_project(Tape<T>& tape, int v, int mask, int y, int qinv) {
  const Tensor<T>& vv = tape.val(v);
  const Tensor<T>& mv = tape.val(mask);
  if (vv.ndim() != 4 || vv.shape[0] != 1) {
    throw DimensionError("op_gap_project: expects [1,T,H,W], got " + vv.shape_str());
  }
  require_same_shape(vv, mv, "op_gap_project");
  const int tdim = vv.shape[1];
  const std::size_t plane = static_cast<std::size_t>(vv.shape[2]) * vv.shape[3];
  const Tensor<T>& yv = tape.val(y);
  const Tensor<T>& qv = tape.val(qinv);

  Tensor<T> value(vv.shape);
  for (std::size_t i = 0; i < plane; ++i) {
    T residual = yv.data[i];
    for (int f = 0; f < tdim; ++f) residual -= mv.data[f * plane + i] * vv.data[f * plane + i];
    const T r = residual * qv.data[i];
    for (int f = 0; f < tdim; ++f) {
      value.data[f * plane + i] = vv.data[f * plane + i] + mv.data[f * plane + i] * r;
    }
  }
  return tape.make_node("gap_project", std::move(value), {v, mask, y, qinv},
                        [v, mask, qinv, tdim, plane](Tape<T>& t, int id) {
                          if (!t.requires_grad(v)) return;
                          const Tensor<T>& g = t.grad(id);
                          const Tensor<T>& mv = t.val(mask);
                          const Tensor<T>& qv = t.val(qinv);
                          Tensor<T> gv(g.shape);
                          for (std::size_t i = 0; i < plane; ++i) {
                            T acc = T(0);
                            for (int f = 0; f < tdim; ++f) {
                              acc += mv.data[f * plane + i] * g.data[f * plane + i];
                            }
                            const T r = acc * qv.data[i];
                            for (int f = 0; f < tdim; ++f) {
                              gv.data[f * plane + i] =
                                  g.data[f * plane + i] - mv.data[f * plane + i] * r;
                            }
                          }
                          t.accumulate(v, gv);
                        });
}

/// RGGB Bayer sampling of a [3,T,H,W] tensor into [1,T,H,W] (R at the origin).
template <class T>
int op_bayer_mosaic(Tape<T>& tape, int x) {
  const Tensor<T>& v = tape.val(x);
  if (v.ndim() != 4 || v.shape[0] != 3) {
    throw DimensionError("op_bayer_mosaic: expects [3,T,H,W], got " + v.shape_str());
  }
  const int tdim = v.shape[1], hdim = v.shape[2], wdim = v.shape[3];
  if (hdim % 2 != 0 || wdim % 2 != 0) {
    throw DimensionError("op_bayer_mosaic: H and W must be even");
  }
  const std::size_t plane = static_cast<std::size_t>(hdim) * wdim;
  const std::size_t chan = static_cast<std::size_t>(tdim) * plane;
  auto channel_of = [](int h, int w) {
    return h % 2 == 0 ? (w % 2 == 0 ? 0 : 1) : (w % 2 == 0 ? 1 : 2);
  };

  Tensor<T> value({1, tdim, hdim, wdim});
  for (int f = 0; f < tdim; ++f) {
    for (int h = 0; h < hdim; ++h) {
      for (int w = 0; w < wdim; ++w) {
        const int c = channel_of(h, w);
        value.data[f * plane + h * static_cast<std::size_t>(wdim) + w] =
            v.data[c * chan + f * plane + h * static_cast<std::size_t>(wdim) + w];
      }
    }
  }
  return tape.make_node("bayer_mosaic", std::move(value), {x},
                        [x, tdim, hdim, wdim, plane, chan, channel_of](Tape<T>& t, int id) {
                          const Tensor<T>& g = t.grad(id);
                          Tensor<T> gx(t.val(x).shape);
                          for (int f = 0; f < tdim; ++f) {
                            for (int h = 0; h < hdim; ++h) {
                              for (int w = 0; w < wdim; ++w) {
                                const int c = channel_of(h, w);
                                gx.data[c * chan + f * plane +
                                        h * static_cast<std::size_t>(wdim) + w] =
                                    g.data[f * plane + h * static_cast<std::size_t>(wdim) + w];
                              }
                            }
                          }
                          t.accumulate(x, gx);
                        });
}

}  // namespace vcs
