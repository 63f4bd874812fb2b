#include "wrd/numerics/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "wrd/error.hpp"

namespace wrd::num {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = numel(shape);
  return constant(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                           BackwardFn backward) {
  Tensor out = constant(std::move(shape), std::move(values));
  if (!g_grad_enabled) return out;
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.defined() && t.requires_grad(); });
  if (!needs) return out;
  out.node_->requires_grad = true;
  out.node_->inputs.reserve(inputs.size());
  for (auto& in : inputs) out.node_->inputs.push_back(in.node_);
  out.node_->backward = std::move(backward);
  return out;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw RankError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape()));
  }
  return node_->shape[axis];
}


double Tensor::item() const {
  if (size() != 1) throw RankError("item() on non-scalar tensor " + shape_str(shape()));
  return node_->value[0];
}

double Tensor::at(std::size_t i) const { return node_->value.at(i); }

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw RankError("at(row, col) needs a matrix, got " + shape_str(shape()));
  return node_->value.at(row * node_->shape[1] + col);
}

bool Tensor::has_grad() const { return !node_->grad.empty(); }
std::span<const double> Tensor::grad() const { return node_->grad; }

std::span<double> Tensor::mutable_grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::clear_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const { return constant(node_->shape, node_->value); }

void Tensor::backward() const {
  if (size() != 1) {
    throw RankError("backward() needs a scalar loss, got shape " + shape_str(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads hold only this sweep's contribution; leaves accumulate.
  for (Node* node : order) {
    if (node->backward) node->grad.assign(node->value.size(), 0.0);
  }
  if (node_->grad.empty()) node_->grad.assign(1, 0.0);
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward || node->grad.empty()) continue;
    for (auto& in : node->inputs) {
      if (in->requires_grad && in->grad.empty()) in->grad.assign(in->value.size(), 0.0);
    }
    node->backward(*node);
  }
}

}  // namespace wrd::num
