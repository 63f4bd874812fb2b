#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wrd::num {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Propagates `self.grad` into the grads of `self.inputs`. Input grads are
// allocated (zero-filled) before the call for every input that requires grad.
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a backward pass reaches the node
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  BackwardFn backward;
};

// Dense row-major array of doubles; a handle onto a node of the reverse-mode
// graph. Copies share the node. Leaves created with `parameter` accumulate
// gradients across backward passes until `zero_grad`.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor parameter(Shape shape, std::vector<double> values);

  // Records an op result. When no input requires grad (or grad recording is
  // disabled) the inputs and backward function are dropped.
  static Tensor make_result(Shape shape, std::vector<double> values,
                            std::vector<Tensor> inputs, BackwardFn backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  // Mutation is for leaves (optimizer updates, finite-difference probes).
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  // Leaf copy of the current value with no graph attachment.
  Tensor detach() const;

  // Reverse-mode sweep from a scalar. Throws RankError otherwise.
  void backward() const;

  const NodePtr& node() const { return node_; }

 private:
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

}  // namespace wrd::num
