#pragma once

#include <cmath>
#include <random>
#include <utility>

#include "vcs/adam.hpp"
#include "vcs/ops.hpp"

namespace vcs {

/// One 3D conv with its parameters. init="he" draws Kaiming-normal weights;
/// init="zero" starts the layer silent (used for the closing conv of each
/// coupling branch so blocks begin as identities).
template <class T>
struct Conv3dLayer {
  Parameter<T> w, b;
  Conv3dSpec spec;

  void init(int c_in, int c_out, std::mt19937_64& rng, bool zero_init = false,
            Conv3dSpec sp = {1, 1, 1, 1, 1, 1}, int kt = 3, int kh = 3, int kw = 3) {
    spec = sp;
    w.value = Tensor<T>({c_out, c_in, kt, kh, kw});
    b.value = Tensor<T>({c_out});
    if (!zero_init) {
      const T stddev = static_cast<T>(std::sqrt(2.0 / (static_cast<double>(c_in) * kt * kh * kw)));
      w.value.fill_randn(rng, stddev);
    }
    w.zero_grad();
    b.zero_grad();
  }

  Tensor<T> eval(const Tensor<T>& x) const { return conv3d_forward(x, w.value, b.value, spec); }

  int build(Tape<T>& tape, int x) {
    const int wid = w.trainable ? tape.leaf(&w.value, &w.grad) : tape.constant_ref(&w.value);
    const int bid = b.trainable ? tape.leaf(&b.value, &b.grad) : tape.constant_ref(&b.value);
    return op_conv3d(tape, x, wid, bid, spec);
  }

  void collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

/// Coupling branch of an invertible block: conv3d -> leaky ReLU -> conv3d,
/// channels c/2 -> c/2, 3x3x3 kernels, zero padding.
template <class T>
struct CouplingSubnet {
  Conv3dLayer<T> conv1, conv2;
  T slope = T(0.01);

  void init(int channels, std::mt19937_64& rng) {
    conv1.init(channels, channels, rng, false);
    conv2.init(channels, channels, rng, true);
  }

  Tensor<T> eval(const Tensor<T>& s) const {
    return conv2.eval(leaky_relu_forward(conv1.eval(s), slope));
  }

  int build(Tape<T>& tape, int s) {
    return conv2.build(tape, op_leaky_relu(tape, conv1.build(tape, s), slope));
  }

  void collect(std::vector<Parameter<T>*>& out) {
    conv1.collect(out);
    conv2.collect(out);
  }

  bool any_trainable() const {
    return conv1.w.trainable || conv1.b.trainable || conv2.w.trainable || conv2.b.trainable;
  }
};

/// Additive coupling block. Forward: s1' = s1 + F(s2), s2' = s2 + G(s1').
/// Inverse: s2 = s2' - G(s1'), s1 = s1' - F(s2).
template <class T>
struct InvertibleBlock {
  CouplingSubnet<T> f, g;

  void init(int half_channels, std::mt19937_64& rng) {
    f.init(half_channels, rng);
    g.init(half_channels, rng);
  }

  void collect(std::vector<Parameter<T>*>& out) {
    f.collect(out);
    g.collect(out);
  }

  bool any_trainable() const { return f.any_trainable() || g.any_trainable(); }
};

template <class T>
std::pair<Tensor<T>, Tensor<T>> invertible_forward(const InvertibleBlock<T>& block,
                                                   const Tensor<T>& s1, const Tensor<T>& s2) {
  require_same_shape(s1, s2, "invertible_forward");
  Tensor<T> f = block.f.eval(s2);
  Tensor<T> s1p(s1.shape);
  for (std::size_t i = 0; i < s1.numel(); ++i) s1p.data[i] = s1.data[i] + f.data[i];
  Tensor<T> g = block.g.eval(s1p);
  Tensor<T> s2p(s2.shape);
  for (std::size_t i = 0; i < s2.numel(); ++i) s2p.data[i] = s2.data[i] + g.data[i];
  return {std::move(s1p), std::move(s2p)};
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> invertible_inverse(const InvertibleBlock<T>& block,
                                                   const Tensor<T>& s1p, const Tensor<T>& s2p) {
  require_same_shape(s1p, s2p, "invertible_inverse");
  Tensor<T> g = block.g.eval(s1p);
  Tensor<T> s2(s2p.shape);
  for (std::size_t i = 0; i < s2p.numel(); ++i) s2.data[i] = s2p.data[i] - g.data[i];
  Tensor<T> f = block.f.eval(s2);
  Tensor<T> s1(s1p.shape);
  for (std::size_t i = 0; i < s1p.numel(); ++i) s1.data[i] = s1p.data[i] - f.data[i];
  return {std::move(s1), std::move(s2)};
}

template <class T>
struct ReversibleGrads {
  Tensor<T> grad_s1, grad_s2;
  std::size_t peak_tape_bytes = 0;
};

/// Memory-free backward through a block chain: inputs are recovered from the
/// chain output by the inverse pass, each block's forward is re-run on a
/// local tape, and gradients flow block by block from last to first.
/// Parameter gradients accumulate into the blocks' grad slots. Peak stored
/// activations are one block's worth regardless of chain length.
template <class T>
ReversibleGrads<T> reversible_backward(const std::vector<InvertibleBlock<T>*>& blocks,
                                       const Tensor<T>& s1_out, const Tensor<T>& s2_out,
                                       const Tensor<T>& grad_s1_out,
                                       const Tensor<T>& grad_s2_out) {
  require_same_shape(s1_out, s2_out, "reversible_backward");
  require_same_shape(s1_out, grad_s1_out, "reversible_backward");
  require_same_shape(s2_out, grad_s2_out, "reversible_backward");

  Tensor<T> cur1 = s1_out, cur2 = s2_out;
  Tensor<T> g1 = grad_s1_out, g2 = grad_s2_out;
  std::size_t peak = 0;

  for (std::size_t k = blocks.size(); k-- > 0;) {
    InvertibleBlock<T>& block = *blocks[k];
    auto [s1_in, s2_in] = invertible_inverse(block, cur1, cur2);
    for (std::size_t i = 0; i < s1_in.numel(); ++i) {
      if (!std::isfinite(static_cast<double>(s1_in.data[i])) ||
          !std::isfinite(static_cast<double>(s2_in.data[i]))) {
        throw NumericError("reversible_backward: recomputed activations are not finite");
      }
    }

    Tensor<T> sink1, sink2;
    Tape<T> local;
    const int l1 = local.leaf(&s1_in, &sink1);
    const int l2 = local.leaf(&s2_in, &sink2);
    const int s1p = op_add(local, l1, block.f.build(local, l2));
    const int s2p = op_add(local, l2, block.g.build(local, s1p));
    local.backward_seeded({{s1p, g1}, {s2p, g2}});
    peak = std::max(peak, local.activation_bytes());

    g1 = std::move(sink1);
    g2 = std::move(sink2);
    cur1 = std::move(s1_in);
    cur2 = std::move(s2_in);
  }

  return {std::move(g1), std::move(g2), peak};
}

namespace detail {

template <class T>
std::pair<Tensor<T>, Tensor<T>> split_halves(const Tensor<T>& x) {
  if (x.ndim() != 4 || x.shape[0] % 2 != 0) {
    throw DimensionError("invertible chain: expects [C,T,H,W] with even C, got " + x.shape_str());
  }
  const int half = x.shape[0] / 2;
  std::vector<int> hshape = x.shape;
  hshape[0] = half;
  Tensor<T> s1(hshape), s2(hshape);
  const std::size_t n = s1.numel();
  std::copy_n(x.data.data(), n, s1.data.data());
  std::copy_n(x.data.data() + n, n, s2.data.data());
  return {std::move(s1), std::move(s2)};
}

template <class T>
Tensor<T> join_halves(const Tensor<T>& s1, const Tensor<T>& s2) {
  std::vector<int> shape = s1.shape;
  shape[0] *= 2;
  Tensor<T> out(shape);
  std::copy_n(s1.data.data(), s1.numel(), out.data.data());
  std::copy_n(s2.data.data(), s2.numel(), out.data.data() + s1.numel());
  return out;
}

}  // namespace detail

/// The invertible chain as one tape node. Forward stores only the chain
/// output; backward recomputes with reversible_backward, so intermediate
/// block activations never reach the tape.
template <class T>
int op_reversible_chain(Tape<T>& tape, int x, const std::vector<InvertibleBlock<T>*>& blocks) {
  auto [s1, s2] = detail::split_halves(tape.val(x));
  for (const InvertibleBlock<T>* block : blocks) {
    auto [n1, n2] = invertible_forward(*block, s1, s2);
    s1 = std::move(n1);
    s2 = std::move(n2);
  }
  Tensor<T> value = detail::join_halves(s1, s2);

  bool params_trainable = false;
  for (const InvertibleBlock<T>* block : blocks) {
    params_trainable = params_trainable || block->any_trainable();
  }

  return tape.make_node(
      "reversible_chain", std::move(value), {x},
      [x, blocks](Tape<T>& t, int id) {
        auto [o1, o2] = detail::split_halves(t.val(id));
        auto [g1, g2] = detail::split_halves(t.grad(id));
        ReversibleGrads<T> grads = reversible_backward(blocks, o1, o2, g1, g2);
        t.peak_recompute_bytes = std::max(t.peak_recompute_bytes, grads.peak_tape_bytes);
        if (t.requires_grad(x)) {
          t.accumulate(x, detail::join_halves(grads.grad_s1, grads.grad_s2));
        }
      },
      params_trainable);
}

/// Reference path: the same chain recorded op by op on the tape, storing
/// every intermediate activation. Used as the stored-activation oracle.
template <class T>
int op_invertible_chain_naive(Tape<T>& tape, int x,
                              const std::vector<InvertibleBlock<T>*>& blocks) {
  const Tensor<T>& v = tape.val(x);
  if (v.ndim() != 4 || v.shape[0] % 2 != 0) {
    throw DimensionError("invertible chain: expects [C,T,H,W] with even C, got " + v.shape_str());
  }
  const int half = v.shape[0] / 2;
  int s1 = op_slice_channels(tape, x, 0, half);
  int s2 = op_slice_channels(tape, x, half, 2 * half);
  for (InvertibleBlock<T>* block : blocks) {
    s1 = op_add(tape, s1, block->f.build(tape, s2));
    s2 = op_add(tape, s2, block->g.build(tape, s1));
  }
  return op_concat_channels(tape, {s1, s2});
}

}  // namespace vcs
