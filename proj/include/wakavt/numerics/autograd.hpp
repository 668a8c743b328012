// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "wakavt/numerics/tensor.hpp"

namespace wakavt::numerics {

/**
 * One vertex of the reverse-mode tape.
 *
 * Leaves created by ParameterStore own the gradient slot of a parameter;
 * interior nodes hold a closure that pushes `grad` into their parents.
 * Nodes are created by ops only while gradient recording is enabled and at
 * least one input requires a gradient.
 */
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  /// Gradient buffer, zero-initialised on first use.
  Tensor& grad_buffer();
};

using NodePtr = std::shared_ptr<Node>;

/// Handle to a tape node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

Var constant(Tensor value);
/// A leaf whose gradient is accumulated by backward().
Var leaf(Tensor value);

/// Whether ops currently record backward closures (thread-local).
bool grad_enabled();

/// Disables tape recording for its lifetime on the current thread.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

using BackwardFn = std::function<void(Node&)>;

/// Builds an op result; records `fn` only when some input needs a gradient.
Var make_result(Tensor value, std::vector<Var> inputs, BackwardFn fn);

/// Propagates d(loss)/d(node) to every reachable leaf, accumulating into
/// leaf gradients. `loss` must hold exactly one value.
void backward(const Var& loss);

}  // namespace wakavt::numerics
