#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eccnn/precision.hpp"

ECCNN_BEGIN_NAMESPACE

// N x C x H x W, row-major with W fastest.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until the first adjoint arrives
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  bool has_grad() const { return !grad.empty(); }
  std::vector<Real>& grad_buffer();
};

}  // namespace detail

// Handle to a node of the autodiff graph. Copies share the node. Values are
// not modified after creation except for leaf tensors owned by an optimizer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<Real> data,
                          bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const { return shape().numel(); }

  std::span<const Real> data() const;
  // Only valid on leaves; used by optimizers and test harnesses.
  std::span<Real> mutable_data();

  Real at(int n, int c, int h, int w) const;
  Real item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const Real> grad() const;
  void clear_grad();

  // Same values, cut off from the graph.
  Tensor detach() const;
  const char* op_name() const;

  // Graph plumbing used by ops and the tape.
  static Tensor from_node(std::shared_ptr<detail::Node> node);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// Builds the output of an op. The backward closure is attached only when
// recording is enabled and at least one input requires a gradient.
Tensor make_op_result(Shape shape, std::vector<Real> data, const char* op,
                      std::vector<Tensor> inputs,
                      std::function<void(detail::Node&)> backward);

// Reverse topological record of every op reachable from a root.
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t size() const { return order_.size(); }
  // Ops in execution order (inputs before outputs).
  const std::vector<detail::Node*>& ops() const { return order_; }

  // Seeds the root with d(root) = 1 and runs adjoints in reverse order.
  void replay_adjoints() const;

 private:
  std::vector<detail::Node*> order_;
  std::shared_ptr<detail::Node> root_;
};

// Populates grads of every requires_grad tensor reachable from a scalar loss.
void backward(const Tensor& loss);

ECCNN_END_NAMESPACE
