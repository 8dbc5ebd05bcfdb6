#include "eccnn/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "eccnn/errors.hpp"

ECCNN_BEGIN_NAMESPACE

namespace {
thread_local bool g_grad_enabled = true;

void check_shape(const Shape& s) {
  if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0) {
    throw ShapeError("tensor dimensions must be positive, got " + s.str());
  }
}
}  // namespace

std::string Shape::str() const {
  std::ostringstream os;
  os << n << "x" << c << "x" << h << "x" << w;
  return os.str();
}

std::vector<Real>& detail::Node::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), Real(0));
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(shape, Real(0), requires_grad);
}

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
  check_shape(shape);
  return from_data(shape, std::vector<Real>(shape.numel(), value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<Real> data, bool requires_grad) {
  check_shape(shape);
  if (data.size() != shape.numel()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape.str());
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const { return node_->shape; }

std::span<const Real> Tensor::data() const { return node_->data; }

std::span<Real> Tensor::mutable_data() {
  if (node_->backward) {
    throw Error("mutable_data() is only allowed on leaf tensors");
  }
  return node_->data;
}

Real Tensor::at(int n, int c, int h, int w) const {
  const Shape& s = shape();
  return node_->data[((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w];
}

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape().str());
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && node_->has_grad(); }
std::span<const Real> Tensor::grad() const { return node_->grad; }
void Tensor::clear_grad() {
  node_->grad.clear();
  node_->grad.shrink_to_fit();
}

Tensor Tensor::detach() const {
  return from_data(shape(), node_->data, false);
}

const char* Tensor::op_name() const { return node_->op; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

Tensor make_op_result(Shape shape, std::vector<Real> data, const char* op,
                      std::vector<Tensor> inputs,
                      std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->data = std::move(data);
  node->op = op;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (any && g_grad_enabled) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

Tape Tape::record(const Tensor& root) {
  Tape tape;
  tape.root_ = root.node();
  if (!root.requires_grad()) return tape;

  // Iterative post-order DFS; a node is emitted after all of its inputs.
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child && child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      tape.order_.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

void Tape::replay_adjoints() const {
  if (order_.empty()) return;
  for (detail::Node* node : order_) {
    if (node->backward) node->grad.clear();
  }
  auto& seed = root_->grad_buffer();
  for (auto& g : seed) g += Real(1);
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::Node* node = *it;
    if (!node->backward) continue;
    if (node->has_grad()) node->backward(*node);
    // Interior adjoints are consumed; release them.
    node->grad.clear();
    node->grad.shrink_to_fit();
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw Error("backward() on an undefined tensor");
  if (loss.numel() != 1) {
    throw ShapeError("backward() requires a scalar loss, got " + loss.shape().str());
  }
  if (!loss.requires_grad()) {
    throw Error("backward(): loss is not connected to any tensor requiring grad");
  }
  Tape::record(loss).replay_adjoints();
}

ECCNN_END_NAMESPACE
