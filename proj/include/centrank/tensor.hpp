#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "centrank/error.hpp"

namespace centrank {

// Reverse-mode tensors, define-by-run. A Tensor is a shared handle to a node
// holding data, a lazily allocated gradient, and a closure that pushes its
// adjoint to its parents. Graphs are rebuilt every forward pass, so shapes
// may vary freely between batches. Rank 0 (empty shape) is a scalar; rank 1
// a vector; rank 2 a row-major matrix. Parents are only recorded when some
// input tracks gradients, which keeps pure evaluation allocation-light.
class Tensor {
  public:
    struct Node {
        std::vector<std::size_t> shape;
        std::vector<double> data;
        std::vector<double> grad;  // empty until touched by backward
        bool requires_grad = false;
        std::vector<Tensor> parents;
        // Closures capture the node by raw pointer: they live on the node they
        // read, so an owning capture would cycle and leak the whole graph. The
        // node is alive whenever backprop runs because backward() walks from a
        // root the caller owns and parents keep the upstream chain alive.
        std::function<void()> backprop;

        std::size_t size() const { return data.size(); }
        void ensure_grad() {
            if (grad.empty()) grad.assign(data.size(), 0.0);
        }
    };

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false) {
        return with_data(std::move(shape), {}, requires_grad, /*fill=*/true);
    }

    static Tensor from(std::vector<std::size_t> shape, std::vector<double> data,
                       bool requires_grad = false) {
        return with_data(std::move(shape), std::move(data), requires_grad, false);
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return from({}, {v}, requires_grad);
    }

    static Tensor row(std::vector<double> data, bool requires_grad = false) {
        const std::size_t d = data.size();
        return from({1, d}, std::move(data), requires_grad);
    }

    bool defined() const { return bool(node_); }
    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->data.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    bool requires_grad() const { return node_->requires_grad; }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }
    std::vector<double>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    bool has_grad() const { return !node_->grad.empty(); }
    void clear_grad() { node_->grad.clear(); }

    double item() const {
        if (size() != 1) throw UsageError("Tensor::item: tensor is not a scalar");
        return node_->data[0];
    }

    double at(std::size_t i, std::size_t j) const {
        return node_->data[i * node_->shape[1] + j];
    }

    Node* raw() const { return node_.get(); }

    // Runs reverse-mode accumulation from this (scalar) tensor.
    void backward() const;

    static Tensor adopt(std::shared_ptr<Node> node) {
        Tensor t;
        t.node_ = std::move(node);
        return t;
    }

  private:
    static Tensor with_data(std::vector<std::size_t> shape, std::vector<double> data,
                            bool requires_grad, bool fill) {
        std::size_t total = 1;
        for (std::size_t d : shape) total *= d;
        auto node = std::make_shared<Node>();
        node->shape = std::move(shape);
        if (fill) {
            node->data.assign(total, 0.0);
        } else {
            if (data.size() != total) {
                throw ShapeError("Tensor: data length " + std::to_string(data.size()) +
                                 " does not match shape product " + std::to_string(total));
            }
            node->data = std::move(data);
        }
        node->requires_grad = requires_grad;
        return adopt(std::move(node));
    }

    std::shared_ptr<Node> node_;
};

namespace detail {

inline std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}

// Creates the result node of an op, wiring parents/closure only when some
// input needs gradients.
inline Tensor make_result(std::vector<std::size_t> shape, std::vector<double> data,
                          std::vector<Tensor> inputs,
                          const std::function<void(Tensor&)>& make_backprop) {
    bool track = false;
    for (const Tensor& t : inputs) track = track || t.requires_grad();
    Tensor out = Tensor::from(std::move(shape), std::move(data), track);
    if (track) {
        out.raw()->parents = std::move(inputs);
        make_backprop(out);
    }
    return out;
}

}  // namespace detail

inline void Tensor::backward() const {
    if (!node_) throw UsageError("backward: undefined tensor");
    if (size() != 1) {
        throw UsageError("backward: loss must be scalar, got shape " +
                         detail::shape_str(shape()));
    }
    // Iterative post-order DFS: `order` ends up inputs-first; replaying it in
    // reverse runs every node's closure before its parents'.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next_parent] = stack.back();
        if (next_parent < node->parents.size()) {
            Node* parent = node->parents[next_parent++].raw();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop();
    }
}

// --- Pointwise ops -----------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return detail::make_result(a.shape(), std::move(out), {a, b}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0], b = self->parents[1];
            const auto& g = self->grad;
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        };
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return detail::make_result(a.shape(), std::move(out), {a, b}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0], b = self->parents[1];
            const auto& g = self->grad;
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
        };
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return detail::make_result(a.shape(), std::move(out), {a, b}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0], b = self->parents[1];
            const auto& g = self->grad;
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.data()[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.data()[i];
            }
        };
    });
}

inline Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
    return detail::make_result(a.shape(), std::move(out), {a}, [c](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, c]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
        };
    });
}

inline Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    return detail::make_result(a.shape(), std::move(out), {a}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                if (a.data()[i] > 0.0) ga[i] += g[i];
        };
    });
}

// Branch-free stable logistic: 0.5 * (1 + tanh(x/2)) never overflows and is
// exact at the tails.
inline double sigmoid_value(double x) { return 0.5 * (1.0 + std::tanh(0.5 * x)); }

inline Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_value(a.data()[i]);
    return detail::make_result(a.shape(), std::move(out), {a}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double s = self->data[i];
                ga[i] += g[i] * s * (1.0 - s);
            }
        };
    });
}

inline Tensor log_op(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.data()[i]);
    return detail::make_result(a.shape(), std::move(out), {a}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / a.data()[i];
        };
    });
}

inline Tensor square(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * a.data()[i];
    return detail::make_result(a.shape(), std::move(out), {a}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 2.0 * a.data()[i];
        };
    });
}

// --- Matrix ops ----------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul: operands must be rank 2");
    if (a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: inner dimensions disagree, " +
                         detail::shape_str(a.shape()) + " x " + detail::shape_str(b.shape()));
    }
    const std::size_t p = a.dim(0), q = a.dim(1), r = b.dim(1);
    std::vector<double> out(p * r, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < q; ++k) {
            const double aik = a.data()[i * q + k];
            if (aik == 0.0) continue;  // adjacency operands are mostly zeros
            const double* brow = b.data().data() + k * r;
            double* orow = out.data() + i * r;
            for (std::size_t j = 0; j < r; ++j) orow[j] += aik * brow[j];
        }
    }
    return detail::make_result({p, r}, std::move(out), {a, b}, [p, q, r](Tensor& res) {
        Tensor::Node* const self = res.raw();
        self->backprop = [self, p, q, r]() {
            Tensor a = self->parents[0], b = self->parents[1];
            const auto& g = self->grad;
            if (a.requires_grad()) {  // dA = G * B^T
                auto& ga = a.grad();
                for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t k = 0; k < q; ++k) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < r; ++j)
                            acc += g[i * r + j] * b.data()[k * r + j];
                        ga[i * q + k] += acc;
                    }
            }
            if (b.requires_grad()) {  // dB = A^T * G
                auto& gb = b.grad();
                for (std::size_t i = 0; i < p; ++i) {
                    for (std::size_t k = 0; k < q; ++k) {
                        const double aik = a.data()[i * q + k];
                        if (aik == 0.0) continue;
                        for (std::size_t j = 0; j < r; ++j)
                            gb[k * r + j] += aik * g[i * r + j];
                    }
                }
            }
        };
    });
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: operand must be rank 2");
    const std::size_t n = a.dim(0), m = a.dim(1);
    std::vector<double> out(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out[j * n + i] = a.data()[i * m + j];
    return detail::make_result({m, n}, std::move(out), {a}, [n, m](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, n, m]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += g[j * n + i];
        };
    });
}

inline Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
    std::size_t total = 1;
    for (std::size_t d : shape) total *= d;
    if (total != a.size()) {
        throw ShapeError("reshape: size mismatch " + std::to_string(a.size()) + " -> " +
                         detail::shape_str(shape));
    }
    std::vector<double> out = a.data();
    return detail::make_result(std::move(shape), std::move(out), {a}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        };
    });
}

// --- Structural ops -------------------------------------------------------------

inline Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw UsageError("concat: empty tensor list");
    if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
    for (const Tensor& t : parts)
        if (t.rank() != 2) throw ShapeError("concat: operands must be rank 2");
    const std::size_t other = axis == 0 ? 1 : 0;
    const std::size_t fixed = parts[0].dim(other);
    std::size_t along = 0;
    for (const Tensor& t : parts) {
        if (t.dim(other) != fixed) {
            throw ShapeError("concat: non-concat dimension differs, " +
                             detail::shape_str(t.shape()));
        }
        along += t.dim(axis);
    }
    const std::size_t rows = axis == 0 ? along : fixed;
    const std::size_t cols = axis == 0 ? fixed : along;
    std::vector<double> out(rows * cols);
    std::size_t cursor = 0;
    for (const Tensor& t : parts) {
        const std::size_t tr = t.dim(0), tc = t.dim(1);
        for (std::size_t i = 0; i < tr; ++i)
            for (std::size_t j = 0; j < tc; ++j) {
                const std::size_t oi = axis == 0 ? cursor + i : i;
                const std::size_t oj = axis == 0 ? j : cursor + j;
                out[oi * cols + oj] = t.at(i, j);
            }
        cursor += t.dim(axis);
    }
    return detail::make_result({rows, cols}, std::move(out), parts, [axis, cols](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, axis, cols]() {
            const auto& g = self->grad;
            std::size_t cursor = 0;
            for (Tensor& part : self->parents) {
                const std::size_t tr = part.dim(0), tc = part.dim(1);
                if (part.requires_grad()) {
                    auto& gp = part.grad();
                    for (std::size_t i = 0; i < tr; ++i)
                        for (std::size_t j = 0; j < tc; ++j) {
                            const std::size_t oi = axis == 0 ? cursor + i : i;
                            const std::size_t oj = axis == 0 ? j : cursor + j;
                            gp[i * tc + j] += g[oi * cols + oj];
                        }
                }
                cursor += part.dim(axis);
            }
        };
    });
}

inline Tensor slice_rows(const Tensor& a, std::size_t lo, std::size_t hi) {
    if (a.rank() != 2) throw ShapeError("slice_rows: operand must be rank 2");
    if (lo > hi || hi > a.dim(0)) throw ShapeError("slice_rows: bad range");
    const std::size_t cols = a.dim(1);
    std::vector<double> out(a.data().begin() + lo * cols, a.data().begin() + hi * cols);
    return detail::make_result({hi - lo, cols}, std::move(out), {a}, [lo, cols](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, lo, cols]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[lo * cols + i] += g[i];
        };
    });
}

inline Tensor slice_cols(const Tensor& a, std::size_t lo, std::size_t hi) {
    if (a.rank() != 2) throw ShapeError("slice_cols: operand must be rank 2");
    if (lo > hi || hi > a.dim(1)) throw ShapeError("slice_cols: bad range");
    const std::size_t rows = a.dim(0), cols = a.dim(1), width = hi - lo;
    std::vector<double> out(rows * width);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < width; ++j) out[i * width + j] = a.data()[i * cols + lo + j];
    return detail::make_result({rows, width}, std::move(out), {a},
                               [lo, cols, width](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, lo, cols, width]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            const std::size_t rows = self->shape[0];
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < width; ++j)
                    ga[i * cols + lo + j] += g[i * width + j];
        };
    });
}

// Row gather with repetition allowed; backward scatters-adds, so an index may
// appear many times (the pairwise comparator relies on this).
inline Tensor gather_rows(const Tensor& a, std::vector<std::size_t> idx) {
    if (a.rank() != 2) throw ShapeError("gather_rows: operand must be rank 2");
    const std::size_t cols = a.dim(1);
    std::vector<double> out(idx.size() * cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= a.dim(0)) throw ShapeError("gather_rows: index out of range");
        std::copy_n(a.data().begin() + idx[i] * cols, cols, out.begin() + i * cols);
    }
    const std::size_t rows = idx.size();
    return detail::make_result({rows, cols}, std::move(out), {a},
                               [idx = std::move(idx), cols](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, idx, cols]() {
            Tensor a = self->parents[0];
            const auto& g = self->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t j = 0; j < cols; ++j)
                    ga[idx[i] * cols + j] += g[i * cols + j];
        };
    });
}

// Tiles a [1 x d] row down n rows; backward is a column-wise sum.
inline Tensor broadcast_rows(const Tensor& v, std::size_t n) {
    if (v.rank() != 2 || v.dim(0) != 1) throw ShapeError("broadcast_rows: need a [1 x d] row");
    const std::size_t d = v.dim(1);
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        std::copy_n(v.data().begin(), d, out.begin() + i * d);
    return detail::make_result({n, d}, std::move(out), {v}, [n, d](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, n, d]() {
            Tensor v = self->parents[0];
            const auto& g = self->grad;
            auto& gv = v.grad();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) gv[j] += g[i * d + j];
        };
    });
}

// x[n x d] + v[d] broadcast over rows (bias addition).
inline Tensor add_rowvec(const Tensor& x, const Tensor& v) {
    if (x.rank() != 2 || v.rank() != 1) throw ShapeError("add_rowvec: need [n x d] and [d]");
    const std::size_t n = x.dim(0), d = x.dim(1);
    if (v.dim(0) != d) throw ShapeError("add_rowvec: width mismatch");
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x.data()[i * d + j] + v.data()[j];
    return detail::make_result({n, d}, std::move(out), {x, v}, [n, d](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, n, d]() {
            Tensor x = self->parents[0], v = self->parents[1];
            const auto& g = self->grad;
            if (x.requires_grad()) {
                auto& gx = x.grad();
                for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
            }
            if (v.requires_grad()) {
                auto& gv = v.grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < d; ++j) gv[j] += g[i * d + j];
            }
        };
    });
}

// --- Reductions -------------------------------------------------------------------

inline Tensor sum_all(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) total += v;
    return detail::make_result({}, {total}, {a}, [](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self]() {
            Tensor a = self->parents[0];
            const double g = self->grad[0];
            auto& ga = a.grad();
            for (double& v : ga) v += g;
        };
    });
}

inline Tensor mean_all(const Tensor& a) {
    if (a.size() == 0) throw UsageError("mean_all: empty tensor");
    double total = 0.0;
    for (double v : a.data()) total += v;
    const double inv = 1.0 / double(a.size());
    return detail::make_result({}, {total * inv}, {a}, [inv](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, inv]() {
            Tensor a = self->parents[0];
            const double g = self->grad[0] * inv;
            auto& ga = a.grad();
            for (double& v : ga) v += g;
        };
    });
}

// --- Normalizations ---------------------------------------------------------------

// Per-row standardization followed by elementwise gain and bias. Variance is
// the population form; eps sits inside the square root.
inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                         double eps = 1e-3) {
    if (x.rank() != 2) throw ShapeError("layer_norm: input must be rank 2");
    const std::size_t n = x.dim(0), d = x.dim(1);
    if (d < 2) throw ShapeError("layer_norm: row width must be >= 2");
    if (gain.rank() != 1 || gain.dim(0) != d || bias.rank() != 1 || bias.dim(0) != d) {
        throw ShapeError("layer_norm: gain/bias must be [d]");
    }
    std::vector<double> out(n * d);
    std::vector<double> xhat(n * d), inv_sd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x.data()[i * d + j];
        mean /= double(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x.data()[i * d + j] - mean;
            var += c * c;
        }
        var /= double(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_sd[i] = inv;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (x.data()[i * d + j] - mean) * inv;
            xhat[i * d + j] = h;
            out[i * d + j] = gain.data()[j] * h + bias.data()[j];
        }
    }
    return detail::make_result(
        {n, d}, std::move(out), {x, gain, bias},
        [n, d, xhat = std::move(xhat), inv_sd = std::move(inv_sd)](Tensor& r) {
            Tensor::Node* const self = r.raw();
            self->backprop = [self, n, d, xhat, inv_sd]() {
                Tensor x = self->parents[0];
                Tensor gain = self->parents[1];
                Tensor bias = self->parents[2];
                const auto& g = self->grad;
                if (gain.requires_grad()) {
                    auto& gg = gain.grad();
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j)
                            gg[j] += g[i * d + j] * xhat[i * d + j];
                }
                if (bias.requires_grad()) {
                    auto& gb = bias.grad();
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j) gb[j] += g[i * d + j];
                }
                if (x.requires_grad()) {
                    auto& gx = x.grad();
                    for (std::size_t i = 0; i < n; ++i) {
                        double mean_gy = 0.0, mean_gyx = 0.0;
                        for (std::size_t j = 0; j < d; ++j) {
                            const double gy = g[i * d + j] * gain.data()[j];
                            mean_gy += gy;
                            mean_gyx += gy * xhat[i * d + j];
                        }
                        mean_gy /= double(d);
                        mean_gyx /= double(d);
                        for (std::size_t j = 0; j < d; ++j) {
                            const double gy = g[i * d + j] * gain.data()[j];
                            gx[i * d + j] +=
                                inv_sd[i] * (gy - mean_gy - xhat[i * d + j] * mean_gyx);
                        }
                    }
                }
            };
        });
}

// Min-max rescaling of the whole tensor to [0,1]. Degenerate spans (max-min
// below 1e-12) collapse to zeros with zero gradient — the guard keeps the AM
// objective finite on constant predictions.
inline Tensor minmax_normalize(const Tensor& a) {
    if (a.size() == 0) throw UsageError("minmax_normalize: empty tensor");
    std::size_t argmin = 0, argmax = 0;
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (a.data()[i] < a.data()[argmin]) argmin = i;
        if (a.data()[i] > a.data()[argmax]) argmax = i;
    }
    const double lo = a.data()[argmin], hi = a.data()[argmax];
    const double range = hi - lo;
    const bool degenerate = range < 1e-12;
    std::vector<double> out(a.size());
    if (!degenerate) {
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a.data()[i] - lo) / range;
    }
    return detail::make_result(
        a.shape(), std::move(out), {a}, [argmin, argmax, range, degenerate](Tensor& r) {
            Tensor::Node* const self = r.raw();
            self->backprop = [self, argmin, argmax, range, degenerate]() {
                if (degenerate) return;
                Tensor a = self->parents[0];
                const auto& g = self->grad;
                auto& ga = a.grad();
                const double inv = 1.0 / range;
                // y_i = (x_i - x_min) / (x_max - x_min)
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (g[i] == 0.0) continue;
                    const double y = self->data[i];
                    ga[i] += g[i] * inv;
                    ga[argmin] += g[i] * inv * (y - 1.0);
                    ga[argmax] += g[i] * inv * (-y);
                }
            };
        });
}

// Mean binary cross-entropy evaluated directly from logits in the
// overflow-safe form max(z,0) - z*t + log(1 + exp(-|z|)).
inline Tensor bce_with_logits_mean(const Tensor& logits, const Tensor& targets) {
    detail::require_same_shape(logits, targets, "bce_with_logits_mean");
    if (logits.size() == 0) throw UsageError("bce_with_logits_mean: empty tensor");
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits.data()[i];
        const double t = targets.data()[i];
        total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    const double inv = 1.0 / double(logits.size());
    return detail::make_result({}, {total * inv}, {logits, targets}, [inv](Tensor& r) {
        Tensor::Node* const self = r.raw();
        self->backprop = [self, inv]() {
            Tensor logits = self->parents[0];
            Tensor targets = self->parents[1];
            const double g = self->grad[0] * inv;
            if (logits.requires_grad()) {
                auto& gl = logits.grad();
                for (std::size_t i = 0; i < gl.size(); ++i) {
                    gl[i] += g * (sigmoid_value(logits.data()[i]) - targets.data()[i]);
                }
            }
            if (targets.requires_grad()) {
                auto& gt = targets.grad();
                for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += g * -logits.data()[i];
            }
        };
    });
}

}  // namespace centrank
