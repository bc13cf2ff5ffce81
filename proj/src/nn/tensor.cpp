#include "holo/nn/tensor.hpp"

#include <unordered_set>

#include "holo/error.hpp"

namespace holo::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    require(d >= 0, "negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) { return full(shape, 0.0, requires_grad); }

Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value.assign(nn::numel(shape), v);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values, bool requires_grad) {
  require(values.size() == nn::numel(shape), "tensor payload does not match shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

double Tensor::item() const {
  require(numel() == 1, "item() needs a single-element tensor, got " + shape_str(shape()));
  return node_->value[0];
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

void Tensor::backward() const {
  require(numel() == 1, "backward() needs a scalar, got " + shape_str(shape()));
  if (!node_->requires_grad) throw InputError("backward() on a tensor without gradient history");

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward();
  }
}

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (g_grad_enabled) {
    for (const Tensor& t : inputs)
      if (t.requires_grad()) n->requires_grad = true;
    if (n->requires_grad) {
      n->parents.reserve(inputs.size());
      for (const Tensor& t : inputs) n->parents.push_back(t.ptr());
    }
  }
  return Tensor(std::move(n));
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

}  // namespace holo::nn
