#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vcs/tensor.hpp"

namespace vcs {

/// A trainable tensor and its gradient accumulator.
template <class T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  void zero_grad() {
    if (grad.data.empty() || !grad.same_shape(value)) grad = Tensor<T>(value.shape);
    grad.fill(T(0));
  }
};

/// Bias-corrected Adam moments, beta1=0.9, beta2=0.999, eps=1e-8.
template <class T>
struct AdamState {
  T beta1 = T(0.9), beta2 = T(0.999), eps = T(1e-8);
  std::int64_t step_count = 0;
  std::vector<Tensor<T>> m, v;
};

template <class T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& state, T lr) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: params/grads count mismatch");
  }
  if (state.m.empty()) {
    for (const Tensor<T>* p : params) {
      state.m.emplace_back(p->shape);
      state.v.emplace_back(p->shape);
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: state initialized for a different parameter set");
  }
  state.step_count += 1;
  const T bc1 = T(1) - std::pow(state.beta1, static_cast<T>(state.step_count));
  const T bc2 = T(1) - std::pow(state.beta2, static_cast<T>(state.step_count));
  for (std::size_t j = 0; j < params.size(); ++j) {
    Tensor<T>& p = *params[j];
    const Tensor<T>& g = *grads[j];
    require_same_shape(p, g, "adam_step");
    require_same_shape(p, state.m[j], "adam_step");
    T* mj = state.m[j].data.data();
    T* vj = state.v[j].data.data();
    for (std::size_t i = 0; i < p.numel(); ++i) {
      mj[i] = state.beta1 * mj[i] + (T(1) - state.beta1) * g.data[i];
      vj[i] = state.beta2 * vj[i] + (T(1) - state.beta2) * g.data[i] * g.data[i];
    }
    if (lr == T(0)) continue;  // moments advance, parameters stay bitwise put
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const T mhat = mj[i] / bc1;
      const T vhat = vj[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

template <class T>
void adam_step(const std::vector<Parameter<T>*>& params, AdamState<T>& state, T lr) {
  std::vector<Tensor<T>*> ps;
  std::vector<const Tensor<T>*> gs;
  ps.reserve(params.size());
  gs.reserve(params.size());
  for (Parameter<T>* p : params) {
    ps.push_back(&p->value);
    gs.push_back(&p->grad);
  }
  adam_step(ps, gs, state, lr);
}

template <class T>
void zero_grads(const std::vector<Parameter<T>*>& params) {
  for (Parameter<T>* p : params) p->zero_grad();
}

/// Scales gradients so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
template <class T>
T clip_global_norm(const std::vector<Parameter<T>*>& params, T max_norm) {
  double sq = 0.0;
  for (const Parameter<T>* p : params) {
    for (const T& g : p->grad.data) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const T norm = static_cast<T>(std::sqrt(sq));
  if (norm > max_norm && norm > T(0)) {
    const T scale = max_norm / norm;
    for (Parameter<T>* p : params) {
      for (T& g : p->grad.data) g *= scale;
    }
  }
  return norm;
}

}  // namespace vcs
