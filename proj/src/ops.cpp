#include "shgn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>

#include "shgn/error.hpp"

namespace shgn::ops {

namespace {

using Backward = std::function<void(TapeNode&)>;

Tensor record(Shape shape, std::vector<double> value, std::initializer_list<const Tensor*> inputs,
              Backward backward) {
    auto node = std::make_shared<TapeNode>();
    node->shape = shape;
    node->value = std::move(value);
    if (grad_enabled()) {
        bool any = false;
        for (const Tensor* t : inputs) any = any || t->requires_grad();
        if (any) {
            node->requires_grad = true;
            for (const Tensor* t : inputs) node->parents.push_back(t->node());
            node->backward_fn = std::move(backward);
        }
    }
    return Tensor(std::move(node));
}

// Gradient buffer of parent i, or nullptr when that input is a constant.
double* parent_grad(TapeNode& self, std::size_t i) {
    TapeNode& p = *self.parents[i];
    return p.requires_grad ? p.ensure_grad().data() : nullptr;
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
    if (!(a.shape() == b.shape())) shape_fail(op, a.shape(), b.shape());
}

void check_axis(const char* op, int axis) {
    if (axis != 0 && axis != 1) throw ShapeError(std::string(op) + ": axis must be 0 or 1");
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,k] += G[m,n] * B[k,n]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            c[i * k + p] += acc;
        }
    }
}

// C[k,n] += A[m,k]^T * G[m,n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * grow[j];
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) shape_fail("matmul", a.shape(), b.shape());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
    return record({m, n}, std::move(out), {&a, &b}, [m, k, n](TapeNode& self) {
        const double* g = self.grad.data();
        if (double* ga = parent_grad(self, 0)) gemm_nt(g, self.parents[1]->value.data(), ga, m, n, k);
        if (double* gb = parent_grad(self, 1)) gemm_tn(self.parents[0]->value.data(), g, gb, m, k, n);
    });
}

Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.at(i, j);
    return record({c, r}, std::move(out), {&a}, [r, c](TapeNode& self) {
        if (double* ga = parent_grad(self, 0))
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same("add", a, b);
    std::vector<double> out(a.data().begin(), a.data().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
    return record(a.shape(), std::move(out), {&a, &b}, [](TapeNode& self) {
        for (std::size_t p = 0; p < 2; ++p)
            if (double* g = parent_grad(self, p))
                for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same("sub", a, b);
    std::vector<double> out(a.data().begin(), a.data().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.data()[i];
    return record(a.shape(), std::move(out), {&a, &b}, [](TapeNode& self) {
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        if (double* g = parent_grad(self, 1))
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    });
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols()) shape_fail("add_row", a.shape(), bias.shape());
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(a.data().begin(), a.data().end());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bias.data()[j];
    return record(a.shape(), std::move(out), {&a, &bias}, [r, c](TapeNode& self) {
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        if (double* g = parent_grad(self, 1))
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same("mul", a, b);
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return record(a.shape(), std::move(out), {&a, &b}, [](TapeNode& self) {
        const auto& av = self.parents[0]->value;
        const auto& bv = self.parents[1]->value;
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
        if (double* g = parent_grad(self, 1))
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
    });
}

Tensor scalar_mul(const Tensor& a, double s) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& v : out) v *= s;
    return record(a.shape(), std::move(out), {&a}, [s](TapeNode& self) {
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * s;
    });
}

Tensor scale_rows(const Tensor& a, const Tensor& s) {
    if (s.cols() != 1 || s.rows() != a.rows()) shape_fail("scale_rows", a.shape(), s.shape());
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = a.at(i, j) * s.data()[i];
    return record(a.shape(), std::move(out), {&a, &s}, [r, c](TapeNode& self) {
        const auto& av = self.parents[0]->value;
        const auto& sv = self.parents[1]->value;
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i * c + j] * sv[i];
        if (double* g = parent_grad(self, 1))
            for (std::size_t i = 0; i < r; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < c; ++j) acc += self.grad[i * c + j] * av[i * c + j];
                g[i] += acc;
            }
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = a.data()[i];
        // Branches avoid exp overflow for large |x|.
        out[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return record(a.shape(), std::move(out), {&a}, [](TapeNode& self) {
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const double y = self.value[i];
                g[i] += self.grad[i] * y * (1.0 - y);
            }
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, a.data()[i]);
    return record(a.shape(), std::move(out), {&a}, [](TapeNode& self) {
        const auto& av = self.parents[0]->value;
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                if (av[i] > 0.0) g[i] += self.grad[i];
    });
}

Tensor sum(const Tensor& a, int axis) {
    check_axis("sum", axis);
    const std::size_t r = a.rows(), c = a.cols();
    if (axis == 0) {
        std::vector<double> out(c, 0.0);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out[j] += a.at(i, j);
        return record({1, c}, std::move(out), {&a}, [r, c](TapeNode& self) {
            if (double* g = parent_grad(self, 0))
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j];
        });
    }
    std::vector<double> out(r, 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i] += a.at(i, j);
    return record({r, 1}, std::move(out), {&a}, [r, c](TapeNode& self) {
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i];
    });
}

Tensor sum_all(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) total += v;
    return record({1, 1}, {total}, {&a}, [](TapeNode& self) {
        if (double* g = parent_grad(self, 0)) {
            const std::size_t n = self.parents[0]->value.size();
            for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
        }
    });
}

Tensor softmax(const Tensor& a, int axis) {
    check_axis("softmax", axis);
    const std::size_t r = a.rows(), c = a.cols();
    // Lines along the reduced axis: (count, length, stride between elements, offset step).
    const std::size_t lines = axis == 1 ? r : c;
    const std::size_t len = axis == 1 ? c : r;
    const std::size_t stride = axis == 1 ? 1 : c;
    const std::size_t step = axis == 1 ? c : 1;
    std::vector<double> out(a.numel());
    for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t base = l * step;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, a.data()[base + k * stride]);
        double z = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
            const double e = std::exp(a.data()[base + k * stride] - mx);
            out[base + k * stride] = e;
            z += e;
        }
        for (std::size_t k = 0; k < len; ++k) out[base + k * stride] /= z;
    }
    return record(a.shape(), std::move(out), {&a}, [lines, len, stride, step](TapeNode& self) {
        double* g = parent_grad(self, 0);
        if (!g) return;
        for (std::size_t l = 0; l < lines; ++l) {
            const std::size_t base = l * step;
            double dot = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                const std::size_t i = base + k * stride;
                dot += self.grad[i] * self.value[i];
            }
            for (std::size_t k = 0; k < len; ++k) {
                const std::size_t i = base + k * stride;
                g[i] += self.value[i] * (self.grad[i] - dot);
            }
        }
    });
}

Tensor log_softmax_rows(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = a.data().data() + i * c;
        const double mx = *std::max_element(row, row + c);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        const double lse = mx + std::log(z);
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = row[j] - lse;
    }
    return record(a.shape(), std::move(out), {&a}, [r, c](TapeNode& self) {
        double* g = parent_grad(self, 0);
        if (!g) return;
        for (std::size_t i = 0; i < r; ++i) {
            double gs = 0.0;
            for (std::size_t j = 0; j < c; ++j) gs += self.grad[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
                g[i * c + j] += self.grad[i * c + j] - std::exp(self.value[i * c + j]) * gs;
        }
    });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
    check_axis("concat", axis);
    if (parts.empty()) throw ShapeError("concat: no inputs");
    std::size_t rows = 0, cols = 0;
    for (const Tensor& t : parts) {
        if (axis == 0) {
            if (t.cols() != parts[0].cols()) shape_fail("concat", parts[0].shape(), t.shape());
            rows += t.rows();
        } else {
            if (t.rows() != parts[0].rows()) shape_fail("concat", parts[0].shape(), t.shape());
            cols += t.cols();
        }
    }
    if (axis == 0) cols = parts[0].cols(); else rows = parts[0].rows();

    std::vector<double> out(rows * cols);
    std::vector<std::size_t> offsets;
    std::size_t offset = 0;
    for (const Tensor& t : parts) {
        offsets.push_back(offset);
        if (axis == 0) {
            std::copy(t.data().begin(), t.data().end(), out.begin() + static_cast<std::ptrdiff_t>(offset * cols));
            offset += t.rows();
        } else {
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < t.cols(); ++j) out[i * cols + offset + j] = t.at(i, j);
            offset += t.cols();
        }
    }

    auto node = std::make_shared<TapeNode>();
    node->shape = {rows, cols};
    node->value = std::move(out);
    bool any = false;
    for (const Tensor& t : parts) any = any || t.requires_grad();
    if (grad_enabled() && any) {
        node->requires_grad = true;
        for (const Tensor& t : parts) node->parents.push_back(t.node());
        node->backward_fn = [axis, offsets, cols](TapeNode& self) {
            for (std::size_t p = 0; p < self.parents.size(); ++p) {
                double* g = parent_grad(self, p);
                if (!g) continue;
                const Shape& ps = self.parents[p]->shape;
                for (std::size_t i = 0; i < ps.rows; ++i)
                    for (std::size_t j = 0; j < ps.cols; ++j) {
                        const std::size_t src = axis == 0 ? (offsets[p] + i) * cols + j : i * cols + offsets[p] + j;
                        g[i * ps.cols + j] += self.grad[src];
                    }
            }
        };
    }
    return Tensor(std::move(node));
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
    if (count == 0 || start + count > a.cols()) {
        throw ShapeError("slice_cols: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") outside " + a.shape().str());
    }
    const std::size_t r = a.rows(), c = a.cols();
    std::vector<double> out(r * count);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j) out[i * count + j] = a.at(i, start + j);
    return record({r, count}, std::move(out), {&a}, [r, c, start, count](TapeNode& self) {
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < count; ++j) g[i * c + start + j] += self.grad[i * count + j];
    });
}

std::vector<Tensor> split_heads(const Tensor& a, std::size_t heads) {
    if (heads == 0 || a.cols() % heads != 0) {
        throw ShapeError("split_heads: " + std::to_string(heads) + " heads do not divide " + a.shape().str());
    }
    const std::size_t width = a.cols() / heads;
    std::vector<Tensor> out;
    out.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) out.push_back(slice_cols(a, h * width, width));
    return out;
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
    if (index.empty()) throw ShapeError("gather_rows: empty index");
    const std::size_t c = a.cols();
    std::vector<double> out(index.size() * c);
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= a.rows()) {
            throw ShapeError("gather_rows: index " + std::to_string(index[i]) + " outside " + a.shape().str());
        }
        std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(index[i] * c), c, out.begin() + static_cast<std::ptrdiff_t>(i * c));
    }
    std::vector<std::size_t> idx(index.begin(), index.end());
    return record({index.size(), c}, std::move(out), {&a}, [idx = std::move(idx), c](TapeNode& self) {
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += self.grad[i * c + j];
    });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) { return gather_rows(table, ids); }

Tensor index_add_rows(std::size_t rows, std::span<const std::size_t> index, const Tensor& src) {
    if (index.size() != src.rows()) {
        throw ShapeError("index_add_rows: " + std::to_string(index.size()) + " indices for " + src.shape().str());
    }
    const std::size_t c = src.cols();
    std::vector<double> out(rows * c, 0.0);
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= rows) throw ShapeError("index_add_rows: index " + std::to_string(index[i]) + " >= " + std::to_string(rows));
        for (std::size_t j = 0; j < c; ++j) out[index[i] * c + j] += src.at(i, j);
    }
    std::vector<std::size_t> idx(index.begin(), index.end());
    return record({rows, c}, std::move(out), {&src}, [idx = std::move(idx), c](TapeNode& self) {
        if (double* g = parent_grad(self, 0))
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[idx[i] * c + j];
    });
}

Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segment, std::size_t segments) {
    if (scores.cols() != 1 || scores.rows() != segment.size()) {
        throw ShapeError("segment_softmax: scores " + scores.shape().str() + " for " + std::to_string(segment.size()) +
                         " segment ids");
    }
    const std::size_t n = segment.size();
    std::vector<double> mx(segments, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        if (segment[i] >= segments) throw ShapeError("segment_softmax: segment id out of range");
        mx[segment[i]] = std::max(mx[segment[i]], scores.data()[i]);
    }
    std::vector<double> z(segments, 0.0);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(scores.data()[i] - mx[segment[i]]);
        z[segment[i]] += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= z[segment[i]];
    std::vector<std::size_t> seg(segment.begin(), segment.end());
    return record({n, 1}, std::move(out), {&scores}, [seg = std::move(seg), segments](TapeNode& self) {
        double* g = parent_grad(self, 0);
        if (!g) return;
        std::vector<double> dot(segments, 0.0);
        for (std::size_t i = 0; i < seg.size(); ++i) dot[seg[i]] += self.grad[i] * self.value[i];
        for (std::size_t i = 0; i < seg.size(); ++i) g[i] += self.value[i] * (self.grad[i] - dot[seg[i]]);
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const std::size_t r = x.rows(), c = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != c) shape_fail("layer_norm", x.shape(), gamma.shape());
    if (!(beta.shape() == gamma.shape())) shape_fail("layer_norm", gamma.shape(), beta.shape());
    std::vector<double> out(r * c), xhat(r * c), inv_std(r);
    for (std::size_t i = 0; i < r; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += x.at(i, j);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (x.at(i, j) - mean) * (x.at(i, j) - mean);
        var /= static_cast<double>(c);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) {
            xhat[i * c + j] = (x.at(i, j) - mean) * inv_std[i];
            out[i * c + j] = xhat[i * c + j] * gamma.data()[j] + beta.data()[j];
        }
    }
    return record({r, c}, std::move(out), {&x, &gamma, &beta},
                  [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](TapeNode& self) {
                      const auto& gv = self.parents[1]->value;
                      if (double* g = parent_grad(self, 1))
                          for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j] * xhat[i * c + j];
                      if (double* g = parent_grad(self, 2))
                          for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
                      double* gx = parent_grad(self, 0);
                      if (!gx) return;
                      const double n = static_cast<double>(c);
                      for (std::size_t i = 0; i < r; ++i) {
                          double s1 = 0.0, s2 = 0.0;
                          for (std::size_t j = 0; j < c; ++j) {
                              const double dxh = self.grad[i * c + j] * gv[j];
                              s1 += dxh;
                              s2 += dxh * xhat[i * c + j];
                          }
                          for (std::size_t j = 0; j < c; ++j) {
                              const double dxh = self.grad[i * c + j] * gv[j];
                              gx[i * c + j] += inv_std[i] * (dxh - s1 / n - xhat[i * c + j] * s2 / n);
                          }
                      }
                  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets, Reduction reduction) {
    const std::size_t n = logits.rows(), v = logits.cols();
    if (targets.size() != n) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " + logits.shape().str());
    }
    std::vector<double> prob(n * v);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (targets[i] >= v) {
            throw ShapeError("cross_entropy: target id " + std::to_string(targets[i]) + " >= " + std::to_string(v));
        }
        const double* row = logits.data().data() + i * v;
        const double mx = *std::max_element(row, row + v);
        double z = 0.0;
        for (std::size_t j = 0; j < v; ++j) {
            prob[i * v + j] = std::exp(row[j] - mx);
            z += prob[i * v + j];
        }
        for (std::size_t j = 0; j < v; ++j) prob[i * v + j] /= z;
        total += (mx + std::log(z)) - row[targets[i]];
    }
    const double scale = reduction == Reduction::Mean ? 1.0 / static_cast<double>(n) : 1.0;
    std::vector<std::size_t> tgt(targets.begin(), targets.end());
    return record({1, 1}, {total * scale}, {&logits},
                  [n, v, scale, prob = std::move(prob), tgt = std::move(tgt)](TapeNode& self) {
                      double* g = parent_grad(self, 0);
                      if (!g) return;
                      const double up = self.grad[0] * scale;
                      for (std::size_t i = 0; i < n; ++i) {
                          for (std::size_t j = 0; j < v; ++j) g[i * v + j] += up * prob[i * v + j];
                          g[i * v + tgt[i]] -= up;
                      }
                  });
}

Tensor binary_cross_entropy(const Tensor& logits, std::span<const double> targets) {
    const std::size_t n = logits.rows();
    if (logits.cols() != 1 || targets.size() != n) {
        throw ShapeError("binary_cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                         logits.shape().str());
    }
    double total = 0.0;
    std::vector<double> prob(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = logits.data()[i];
        const double y = targets[i];
        // softplus(x) - y*x, stable for either sign of x.
        total += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) - y * x;
        prob[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    const double scale = 1.0 / static_cast<double>(n);
    std::vector<double> tgt(targets.begin(), targets.end());
    return record({1, 1}, {total * scale}, {&logits},
                  [n, scale, prob = std::move(prob), tgt = std::move(tgt)](TapeNode& self) {
                      if (double* g = parent_grad(self, 0))
                          for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0] * scale * (prob[i] - tgt[i]);
                  });
}

}  // namespace shgn::ops
