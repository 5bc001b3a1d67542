#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shgn/tensor.hpp"

// Differentiable tensor operations. Each op checks shapes, computes the forward value,
// and (when gradients are enabled and an input requires them) records a backward rule.
namespace shgn::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// a[r,c] + bias[1,c] for every row.
Tensor add_row(const Tensor& a, const Tensor& bias);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double s);
// a[r,c] * s[r,1], row-wise scaling.
Tensor scale_rows(const Tensor& a, const Tensor& s);

Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);

// axis 0 reduces rows (result 1 x cols); axis 1 reduces columns (result rows x 1).
Tensor sum(const Tensor& a, int axis);
Tensor sum_all(const Tensor& a);
Tensor softmax(const Tensor& a, int axis);
Tensor log_softmax_rows(const Tensor& a);

Tensor concat(std::span<const Tensor> parts, int axis);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
// Column blocks of equal width, one per head.
std::vector<Tensor> split_heads(const Tensor& a, std::size_t heads);

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids);
// Result has `rows` rows; row index[i] receives src row i (duplicates accumulate).
Tensor index_add_rows(std::size_t rows, std::span<const std::size_t> index, const Tensor& src);
// Softmax of scores[E,1] within groups sharing the same segment id.
Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segment, std::size_t segments);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

enum class Reduction { Sum, Mean };

// Softmax cross-entropy of logits[n,V] against n class ids (log-sum-exp form).
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                     Reduction reduction = Reduction::Mean);
// Sigmoid binary cross-entropy of logits[n,1] against targets in {0,1}; mean over n.
Tensor binary_cross_entropy(const Tensor& logits, std::span<const double> targets);

}  // namespace shgn::ops
