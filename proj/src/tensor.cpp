#include "shgn/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "shgn/error.hpp"

namespace shgn {

namespace {
thread_local bool g_grad_enabled = true;
}

std::string Shape::str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

std::vector<double>& TapeNode::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(shape, 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    return from(shape, std::vector<double>(shape.numel(), value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape.rows == 0 || shape.cols == 0) throw ShapeError("tensor: zero-sized shape " + shape.str());
    if (values.size() != shape.numel()) {
        throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " + shape.str());
    }
    auto node = std::make_shared<TapeNode>();
    node->shape = shape;
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1, 1}, {value}, requires_grad); }

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item: tensor is " + shape().str());
    return node_->value[0];
}

std::span<const double> Tensor::grad() const {
    return node_->ensure_grad();
}

void Tensor::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tape build_tape(const Tensor& root) {
    Tape order;
    std::unordered_set<const TapeNode*> visited;
    // Iterative post-order DFS; deep decoders would overflow a recursive walk.
    std::vector<std::pair<TapeNode*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TapeNode* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

void Tensor::backward() const {
    if (numel() != 1) throw ShapeError("backward: root must be a scalar, got " + shape().str());
    if (!requires_grad()) return;
    Tape tape = build_tape(*this);
    node_->ensure_grad()[0] += 1.0;
    for (auto it = tape.rbegin(); it != tape.rend(); ++it) {
        TapeNode* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
        }
    }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace shgn
