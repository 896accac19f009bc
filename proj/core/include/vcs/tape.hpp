#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "vcs/tensor.hpp"

namespace vcs {

/// Reverse-mode tape. Nodes are created in execution order, which is a
/// topological order, so the backward sweep walks ids in reverse and visits
/// each node exactly once. Leaf nodes may reference external tensors
/// (parameters, per-sample inputs) and flush their gradient into a sink.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int)>;

  struct Node {
    const char* op = "";
    std::vector<int> inputs;
    Tensor<T> value;                        // owned unless external is set
    const Tensor<T>* external = nullptr;    // leaf/constant bound by reference
    Tensor<T>* grad_sink = nullptr;         // leaf gradient accumulation target
    Tensor<T> grad;                         // allocated on first contribution
    BackwardFn backward;
    bool requires_grad = false;
  };

  int constant(Tensor<T> v) {
    Node n;
    n.op = "const";
    n.value = std::move(v);
    nodes_.push_back(std::move(n));
    return last_id();
  }

  int constant_ref(const Tensor<T>* v) {
    Node n;
    n.op = "const_ref";
    n.external = v;
    nodes_.push_back(std::move(n));
    return last_id();
  }

  /// A differentiable input bound by reference; backward adds its gradient
  /// into *grad_sink (accumulating across tapes and multiple uses).
  int leaf(const Tensor<T>* value, Tensor<T>* grad_sink) {
    Node n;
    n.op = "leaf";
    n.external = value;
    n.grad_sink = grad_sink;
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return last_id();
  }

  int make_node(const char* op, Tensor<T> value, std::vector<int> inputs, BackwardFn backward,
                bool force_requires_grad = false) {
    Node n;
    n.op = op;
    n.value = std::move(value);
    n.requires_grad = force_requires_grad;
    for (int id : inputs) n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
    n.inputs = std::move(inputs);
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return last_id();
  }

  const Tensor<T>& val(int id) const {
    const Node& n = nodes_[id];
    return n.external != nullptr ? *n.external : n.value;
  }

  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  Tensor<T>& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.data.empty()) n.grad = Tensor<T>(val(id).shape);
    return n.grad;
  }

  bool has_grad(int id) const { return !nodes_[id].grad.data.empty(); }

  void accumulate(int id, const Tensor<T>& g) {
    if (!nodes_[id].requires_grad) return;
    Tensor<T>& dst = grad(id);
    require_same_shape(dst, g, "Tape::accumulate");
    for (std::size_t i = 0; i < g.numel(); ++i) dst.data[i] += g.data[i];
  }

  /// Backward from a scalar node.
  void backward(int root, T seed = T(1)) {
    if (val(root).numel() != 1) {
      throw DimensionError("Tape::backward: root must be a scalar node");
    }
    grad(root).data[0] += seed;
    sweep(root);
  }

  /// Backward from explicit (node, gradient) seeds.
  void backward_seeded(const std::vector<std::pair<int, Tensor<T>>>& seeds) {
    int top = 0;
    for (const auto& [id, g] : seeds) {
      accumulate(id, g);
      top = std::max(top, id);
    }
    sweep(top);
  }

  /// Bytes of node values owned by the tape: the stored-activation footprint.
  std::size_t activation_bytes() const {
    std::size_t total = 0;
    for (const Node& n : nodes_) total += n.value.bytes();
    return total;
  }

  std::size_t size() const { return nodes_.size(); }

  /// Peak local-tape footprint of reversible-chain backward passes run
  /// against this tape (see op_reversible_chain).
  std::size_t peak_recompute_bytes = 0;

 private:
  int last_id() const { return static_cast<int>(nodes_.size()) - 1; }

  void sweep(int top) {
    for (int id = top; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.data.empty()) continue;
      if (n.backward) n.backward(*this, id);
      if (n.grad_sink != nullptr) {
        if (n.grad_sink->data.empty()) {
          *n.grad_sink = n.grad;
        } else {
          require_same_shape(*n.grad_sink, n.grad, "Tape::grad_sink");
          for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            n.grad_sink->data[i] += n.grad.data[i];
          }
        }
      }
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace vcs
