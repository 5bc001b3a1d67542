#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace shgn {

// All tensors are rank-2 (rows x cols); a scalar is 1 x 1.
struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t numel() const { return rows * cols; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

// One recorded operation. Parents are kept alive by the child so the whole
// computation stays reachable from the loss until it is dropped.
struct TapeNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until backward touches this node
    bool requires_grad = false;
    std::vector<std::shared_ptr<TapeNode>> parents;
    std::function<void(TapeNode&)> backward_fn;

    std::vector<double>& ensure_grad();
};

// Topologically ordered operations reachable from a root: every parent precedes its child.
using Tape = std::vector<TapeNode*>;

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TapeNode> node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    std::size_t rows() const { return node_->shape.rows; }
    std::size_t cols() const { return node_->shape.cols; }
    std::size_t numel() const { return node_->shape.numel(); }

    std::span<const double> data() const { return node_->value; }
    std::span<double> mutable_data() { return node_->value; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    // Gradient buffer; all zeros if backward has not reached this tensor.
    std::span<const double> grad() const;
    void zero_grad();

    // Reverse-mode sweep from a scalar; accumulates into every reachable leaf's grad.
    void backward() const;

    const std::shared_ptr<TapeNode>& node() const { return node_; }

private:
    std::shared_ptr<TapeNode> node_;
};

Tape build_tape(const Tensor& root);

// Gradient recording is on by default; a guard disables it for inference.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

}  // namespace shgn
