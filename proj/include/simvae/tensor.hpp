// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense tensors with reverse-mode automatic differentiation over a
// per-forward-pass tape. Tensor<float> is the training type, Tensor<double>
// the verification type (finite-difference checks are unreliable in 32-bit).
//
// Tensors are immutable values: every op allocates its result. The only
// sanctioned mutation is of leaf parameters (optimizer updates and
// finite-difference probes) through data_mut(). The graph built by a
// forward pass is torn down at the end of backward(); leaf gradients
// persist and accumulate across backward calls until zero_grad().

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <cblas.h>

#include "simvae/errors.hpp"
#include "simvae/rng.hpp"

namespace simvae {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

namespace detail {

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad; // allocated on first use
    bool requires_grad = false;
    bool leaf = true;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
};

inline void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k,
                 float alpha, const float* a, std::int64_t lda, const float* b, std::int64_t ldb,
                 float beta, float* c, std::int64_t ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb),
                beta, c, static_cast<int>(ldc));
}

inline void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k,
                 double alpha, const double* a, std::int64_t lda, const double* b, std::int64_t ldb,
                 double beta, double* c, std::int64_t ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb),
                beta, c, static_cast<int>(ldc));
}

} // namespace detail

template <typename T>
class Tensor {
public:
    using Node = detail::Node<T>;

    Tensor() = default;

    Tensor(Shape shape, std::vector<T> data) : n_(std::make_shared<Node>()) {
        if (numel(shape) != static_cast<std::int64_t>(data.size()))
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape));
        n_->shape = std::move(shape);
        n_->data = std::move(data);
    }

    static Tensor zeros(Shape shape) {
        return Tensor(std::move(shape), T(0));
    }
    static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }
    static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

    // Leaf with gradient tracking (model parameter or probe input).
    static Tensor parameter(Shape shape, std::vector<T> data) {
        Tensor t(std::move(shape), std::move(data));
        t.n_->requires_grad = true;
        return t;
    }
    static Tensor parameter(Shape shape, T value = T(0)) {
        Tensor t(std::move(shape), value);
        t.n_->requires_grad = true;
        return t;
    }

    bool defined() const noexcept { return static_cast<bool>(n_); }
    const Shape& shape() const { return node().shape; }
    std::int64_t size() const { return node().numel(); }
    std::int64_t dim(std::size_t i) const { return node().shape.at(i); }
    std::size_t rank() const { return node().shape.size(); }

    const std::vector<T>& data() const { return node().data; }

    // Mutable access, restricted to leaves: optimizer steps and
    // finite-difference probes.
    std::vector<T>& data_mut() {
        if (!node().leaf) throw PreconditionError("data_mut() is only valid on leaf tensors");
        return n_->data;
    }

    T value() const {
        if (node().numel() != 1)
            throw PreconditionError("value() requires a one-element tensor, got shape " +
                                    shape_str(node().shape));
        return n_->data[0];
    }

    bool requires_grad() const { return node().requires_grad; }

    const std::vector<T>& grad() const {
        const_cast<Node&>(node()).ensure_grad();
        return n_->grad;
    }

    void zero_grad() {
        if (n_) std::fill(n_->grad.begin(), n_->grad.end(), T(0));
    }

    // Same values, detached from the graph (never tracks gradients).
    Tensor detach() const {
        Tensor t(node().shape, node().data);
        return t;
    }

    Node& node() const {
        if (!n_) throw PreconditionError("operation on an undefined tensor");
        return *n_;
    }
    const std::shared_ptr<Node>& ptr() const { return n_; }

private:
    Tensor(Shape shape, T fill) : n_(std::make_shared<Node>()) {
        n_->shape = std::move(shape);
        n_->data.assign(static_cast<std::size_t>(numel(n_->shape)), fill);
    }

    std::shared_ptr<Node> n_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// ---------------------------------------------------------------------------
// Graph construction helpers
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> parents,
                      std::function<void(Node<T>&)> backprop) {
    Tensor<T> out(std::move(shape), std::move(data));
    bool track = false;
    for (const auto& p : parents) track = track || p.requires_grad();
    if (track) {
        auto& n = out.node();
        n.requires_grad = true;
        n.leaf = false;
        n.parents.reserve(parents.size());
        for (auto& p : parents) n.parents.push_back(p.ptr());
        n.backprop = std::move(backprop);
    }
    return out;
}

// Right-aligned broadcast shape; only size-1 dimensions stretch.
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        const std::int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        const std::int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1)
            throw DimensionError("shapes " + shape_str(a) + " and " + shape_str(b) +
                                 " are not broadcast-compatible");
        out[r - 1 - i] = std::max(da, db);
    }
    return out;
}

// Row-major strides with 0 in broadcast dimensions, right-aligned to `out`.
inline std::vector<std::int64_t> broadcast_strides(const Shape& in, const Shape& out) {
    std::vector<std::int64_t> stride(out.size(), 0);
    std::int64_t s = 1;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const std::size_t d = in.size() - 1 - i;
        const std::size_t od = out.size() - 1 - i;
        stride[od] = (in[d] == 1 && out[od] != 1) ? 0 : s;
        s *= in[d];
    }
    return stride;
}

// Applies f(out_index, a_index, b_index) over the broadcast iteration space.
template <typename F>
void for_each_broadcast(const Shape& out, const Shape& sa, const Shape& sb, F&& f) {
    const std::int64_t n = numel(out);
    if (sa == sb) { // equal shapes: single linear walk
        for (std::int64_t i = 0; i < n; ++i) f(i, i, i);
        return;
    }
    if (numel(sa) == 1) {
        for (std::int64_t i = 0; i < n; ++i) f(i, 0, i);
        return;
    }
    if (numel(sb) == 1) {
        for (std::int64_t i = 0; i < n; ++i) f(i, i, 0);
        return;
    }
    const auto stra = broadcast_strides(sa, out);
    const auto strb = broadcast_strides(sb, out);
    std::vector<std::int64_t> idx(out.size(), 0);
    std::int64_t ia = 0, ib = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        f(i, ia, ib);
        for (std::size_t d = out.size(); d-- > 0;) {
            ++idx[d];
            ia += stra[d];
            ib += strb[d];
            if (idx[d] < out[d]) break;
            ia -= stra[d] * out[d];
            ib -= strb[d] * out[d];
            idx[d] = 0;
        }
    }
}

// Sums `src` (shaped `from`) into `dst` (shaped `to`), reducing broadcast dims.
template <typename T>
void reduce_to_shape(const std::vector<T>& src, const Shape& from, std::vector<T>& dst,
                     const Shape& to) {
    if (from == to) {
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        return;
    }
    if (numel(to) == 1) {
        T acc = 0;
        for (const T v : src) acc += v;
        dst[0] += acc;
        return;
    }
    const auto stride = broadcast_strides(to, from);
    std::vector<std::int64_t> idx(from.size(), 0);
    std::int64_t j = 0;
    const std::int64_t n = numel(from);
    for (std::int64_t i = 0; i < n; ++i) {
        dst[static_cast<std::size_t>(j)] += src[static_cast<std::size_t>(i)];
        for (std::size_t d = from.size(); d-- > 0;) {
            ++idx[d];
            j += stride[d];
            if (idx[d] < from[d]) break;
            j -= stride[d] * from[d];
            idx[d] = 0;
        }
    }
}

// Generic broadcasting binary op. fwd(a,b) computes the value; dfa/dfb give
// local partials as functions of (a, b, out_grad_element).
template <typename T, class Fwd, class Dfa, class Dfb>
Tensor<T> binary_op(const Tensor<T>& a, const Tensor<T>& b, Fwd&& fwd, Dfa&& dfa, Dfb&& dfb) {
    const Shape out_shape = broadcast_shape(a.shape(), b.shape());
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
    const auto& av = a.data();
    const auto& bv = b.data();
    for_each_broadcast(out_shape, a.shape(), b.shape(), [&](auto i, auto ia, auto ib) {
        out[static_cast<std::size_t>(i)] =
            fwd(av[static_cast<std::size_t>(ia)], bv[static_cast<std::size_t>(ib)]);
    });

    auto pa = a.ptr();
    auto pb = b.ptr();
    auto backprop = [pa, pb, dfa, dfb, out_shape](Node<T>& n) {
        const auto& av2 = pa->data;
        const auto& bv2 = pb->data;
        const std::size_t count = n.grad.size();
        if (pa->requires_grad) {
            std::vector<T> partial(count);
            for_each_broadcast(out_shape, pa->shape, pb->shape, [&](auto i, auto ia, auto ib) {
                partial[static_cast<std::size_t>(i)] =
                    dfa(av2[static_cast<std::size_t>(ia)], bv2[static_cast<std::size_t>(ib)],
                        n.grad[static_cast<std::size_t>(i)]);
            });
            pa->ensure_grad();
            reduce_to_shape(partial, out_shape, pa->grad, pa->shape);
        }
        if (pb->requires_grad) {
            std::vector<T> partial(count);
            for_each_broadcast(out_shape, pa->shape, pb->shape, [&](auto i, auto ia, auto ib) {
                partial[static_cast<std::size_t>(i)] =
                    dfb(av2[static_cast<std::size_t>(ia)], bv2[static_cast<std::size_t>(ib)],
                        n.grad[static_cast<std::size_t>(i)]);
            });
            pb->ensure_grad();
            reduce_to_shape(partial, out_shape, pb->grad, pb->shape);
        }
    };
    return make_result<T>(out_shape, std::move(out), {a, b}, std::move(backprop));
}

template <typename T, class Fwd, class Dfx>
Tensor<T> unary_op(const Tensor<T>& x, Fwd&& fwd, Dfx&& dfx) {
    std::vector<T> out(x.data().size());
    const auto& xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
    auto px = x.ptr();
    auto backprop = [px, dfx](Node<T>& n) {
        if (!px->requires_grad) return;
        px->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            px->grad[i] += dfx(px->data[i], n.data[i], n.grad[i]);
    };
    return make_result<T>(x.shape(), std::move(out), {x}, std::move(backprop));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops (broadcasting limited to size-1 dimensions, right-aligned)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::binary_op(
        a, b, [](T x, T y) { return x + y; }, [](T, T, T g) { return g; },
        [](T, T, T g) { return g; });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::binary_op(
        a, b, [](T x, T y) { return x - y; }, [](T, T, T g) { return g; },
        [](T, T, T g) { return -g; });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::binary_op(
        a, b, [](T x, T y) { return x * y; }, [](T, T y, T g) { return g * y; },
        [](T x, T, T g) { return g * x; });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    return detail::binary_op(
        a, b, [](T x, T y) { return x / y; }, [](T, T y, T g) { return g / y; },
        [](T x, T y, T g) { return -g * x / (y * y); });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& x) {
    return detail::unary_op(
        x, [](T v) { return -v; }, [](T, T, T g) { return -g; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
    return detail::unary_op(
        x, [](T v) { return std::exp(v); }, [](T, T y, T g) { return g * y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
    for (const T v : x.data())
        if (!(v > T(0)))
            throw DomainError("log of non-positive value " + std::to_string(static_cast<double>(v)));
    return detail::unary_op(
        x, [](T v) { return std::log(v); }, [](T v, T, T g) { return g / v; });
}

template <typename T>
Tensor<T> sqrt(const Tensor<T>& x) {
    for (const T v : x.data())
        if (v < T(0))
            throw DomainError("sqrt of negative value " + std::to_string(static_cast<double>(v)));
    return detail::unary_op(
        x, [](T v) { return std::sqrt(v); }, [](T, T y, T g) { return g / (T(2) * y); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    return detail::unary_op(
        x, [](T v) { return v > T(0) ? v : T(0); },
        [](T v, T, T g) { return v > T(0) ? g : T(0); });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
    return detail::unary_op(
        x, [](T v) { return v * v; }, [](T v, T, T g) { return T(2) * v * g; });
}

// Scalar-argument conveniences.
template <typename T>
Tensor<T> add(const Tensor<T>& a, T c) { return add(a, Tensor<T>::scalar(c)); }
template <typename T>
Tensor<T> mul(const Tensor<T>& a, T c) { return mul(a, Tensor<T>::scalar(c)); }

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <typename T>
Tensor<T> operator/(const Tensor<T>& a, const Tensor<T>& b) { return div(a, b); }
template <typename T>
Tensor<T> operator-(const Tensor<T>& x) { return neg(x); }
template <typename T>
Tensor<T> operator*(T c, const Tensor<T>& a) { return mul(a, c); }
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, T c) { return mul(a, c); }
template <typename T>
Tensor<T> operator+(const Tensor<T>& a, T c) { return add(a, c); }
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, T c) { return add(a, -c); }

// ---------------------------------------------------------------------------
// Matrix product (BLAS-backed; reduction order fixed for a given build)
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void check_matrix(const Tensor<T>& t, const char* role) {
    if (t.rank() != 2)
        throw DimensionError(std::string(role) + " of matmul must be a matrix, got shape " +
                             shape_str(t.shape()));
}

} // namespace detail

// C = A·B or A·Bᵀ. Gradients are two further GEMMs.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_b = false) {
    detail::check_matrix(a, "lhs");
    detail::check_matrix(b, "rhs");
    const std::int64_t m = a.dim(0), k = a.dim(1);
    const std::int64_t bk = trans_b ? b.dim(1) : b.dim(0);
    const std::int64_t n = trans_b ? b.dim(0) : b.dim(1);
    if (k != bk)
        throw DimensionError("matmul inner dimensions disagree: " + shape_str(a.shape()) +
                             (trans_b ? " x transpose " : " x ") + shape_str(b.shape()));

    std::vector<T> out(static_cast<std::size_t>(m * n));
    detail::gemm(false, trans_b, m, n, k, T(1), a.data().data(), a.dim(1), b.data().data(),
                 b.dim(1), T(0), out.data(), n);

    auto pa = a.ptr();
    auto pb = b.ptr();
    auto backprop = [pa, pb, m, n, k, trans_b](detail::Node<T>& node) {
        const T* g = node.grad.data();
        if (pa->requires_grad) {
            pa->ensure_grad();
            // dA += G·Bᵀ   (or G·B when B entered transposed)
            detail::gemm(false, !trans_b, m, k, n, T(1), g, n, pb->data.data(), pb->shape[1],
                         T(1), pa->grad.data(), k);
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            if (!trans_b) // dB += Aᵀ·G
                detail::gemm(true, false, k, n, m, T(1), pa->data.data(), k, g, n, T(1),
                             pb->grad.data(), n);
            else // dBᵀ-form: dB += Gᵀ·A
                detail::gemm(true, false, n, k, m, T(1), g, n, pa->data.data(), k, T(1),
                             pb->grad.data(), k);
        }
    };
    return detail::make_result<T>({m, n}, std::move(out), {a, b}, std::move(backprop));
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
Tensor<T> reduce_all(const Tensor<T>& x, bool mean_mode) {
    const auto& xv = x.data();
    T acc = 0;
    for (const T v : xv) acc += v;
    const T scale = mean_mode ? T(1) / T(std::max<std::int64_t>(x.size(), 1)) : T(1);
    auto px = x.ptr();
    auto backprop = [px, scale](Node<T>& n) {
        if (!px->requires_grad) return;
        px->ensure_grad();
        const T g = n.grad[0] * scale;
        for (auto& v : px->grad) v += g;
    };
    return make_result<T>(Shape{}, std::vector<T>{acc * scale}, {x}, std::move(backprop));
}

template <typename T>
Tensor<T> reduce_axis(const Tensor<T>& x, int axis, bool keepdim, bool mean_mode) {
    const auto& shape = x.shape();
    const int r = static_cast<int>(shape.size());
    if (axis < -r || axis >= r)
        throw DimensionError("reduce axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(shape));
    const std::size_t ax = static_cast<std::size_t>(axis < 0 ? axis + r : axis);

    std::int64_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < ax; ++d) outer *= shape[d];
    for (std::size_t d = ax + 1; d < shape.size(); ++d) inner *= shape[d];
    const std::int64_t len = shape[ax];

    Shape out_shape;
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (d == ax) {
            if (keepdim) out_shape.push_back(1);
        } else {
            out_shape.push_back(shape[d]);
        }
    }

    std::vector<T> out(static_cast<std::size_t>(outer * inner), T(0));
    const auto& xv = x.data();
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t l = 0; l < len; ++l) {
            const std::size_t base = static_cast<std::size_t>((o * len + l) * inner);
            const std::size_t ob = static_cast<std::size_t>(o * inner);
            for (std::int64_t i = 0; i < inner; ++i) out[ob + i] += xv[base + i];
        }
    const T scale = mean_mode ? T(1) / T(std::max<std::int64_t>(len, 1)) : T(1);
    if (mean_mode)
        for (auto& v : out) v *= scale;

    auto px = x.ptr();
    auto backprop = [px, outer, inner, len, scale](Node<T>& n) {
        if (!px->requires_grad) return;
        px->ensure_grad();
        for (std::int64_t o = 0; o < outer; ++o)
            for (std::int64_t l = 0; l < len; ++l) {
                const std::size_t base = static_cast<std::size_t>((o * len + l) * inner);
                const std::size_t ob = static_cast<std::size_t>(o * inner);
                for (std::int64_t i = 0; i < inner; ++i)
                    px->grad[base + i] += n.grad[ob + i] * scale;
            }
    };
    return make_result<T>(std::move(out_shape), std::move(out), {x}, std::move(backprop));
}

} // namespace detail

template <typename T>
Tensor<T> sum(const Tensor<T>& x) { return detail::reduce_all(x, false); }
template <typename T>
Tensor<T> mean(const Tensor<T>& x) { return detail::reduce_all(x, true); }
template <typename T>
Tensor<T> sum(const Tensor<T>& x, int axis, bool keepdim = false) {
    return detail::reduce_axis(x, axis, keepdim, false);
}
template <typename T>
Tensor<T> mean(const Tensor<T>& x, int axis, bool keepdim = false) {
    return detail::reduce_axis(x, axis, keepdim, true);
}

// Row maxima of a matrix as an untracked [rows,1] tensor. Shifting by it is
// gradient-neutral, which is exactly what a stable log-sum-exp needs.
template <typename T>
Tensor<T> rowmax_const(const Tensor<T>& x) {
    detail::check_matrix(x, "argument");
    const std::int64_t rows = x.dim(0), cols = x.dim(1);
    std::vector<T> out(static_cast<std::size_t>(rows));
    const auto& xv = x.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        T m = xv[static_cast<std::size_t>(r * cols)];
        for (std::int64_t c = 1; c < cols; ++c)
            m = std::max(m, xv[static_cast<std::size_t>(r * cols + c)]);
        out[static_cast<std::size_t>(r)] = m;
    }
    return Tensor<T>({rows, 1}, std::move(out));
}

// Contiguous column slice of a matrix (or element slice of a vector).
// The encoder's mean/log-variance head split is the main user.
template <typename T>
Tensor<T> slice_last(const Tensor<T>& x, std::int64_t start, std::int64_t len) {
    const auto& shape = x.shape();
    if (shape.empty()) throw DimensionError("slice_last on a scalar");
    const std::int64_t last = shape.back();
    if (start < 0 || len < 0 || start + len > last)
        throw DimensionError("slice [" + std::to_string(start) + "," + std::to_string(start + len) +
                             ") out of range for shape " + shape_str(shape));
    const std::int64_t rows = x.size() / last;
    Shape out_shape = shape;
    out_shape.back() = len;
    std::vector<T> out(static_cast<std::size_t>(rows * len));
    const auto& xv = x.data();
    for (std::int64_t r = 0; r < rows; ++r)
        std::copy_n(xv.begin() + r * last + start, len, out.begin() + r * len);

    auto px = x.ptr();
    auto backprop = [px, start, len, last, rows](detail::Node<T>& n) {
        if (!px->requires_grad) return;
        px->ensure_grad();
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < len; ++c)
                px->grad[static_cast<std::size_t>(r * last + start + c)] +=
                    n.grad[static_cast<std::size_t>(r * len + c)];
    };
    return detail::make_result<T>(std::move(out_shape), std::move(out), {x}, std::move(backprop));
}

// Vertical concatenation of two matrices with equal column counts.
template <typename T>
Tensor<T> vstack(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_matrix(a, "lhs");
    detail::check_matrix(b, "rhs");
    if (a.dim(1) != b.dim(1))
        throw DimensionError("vstack column mismatch: " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    const std::int64_t ra = a.dim(0), rb = b.dim(0), cols = a.dim(1);
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>((ra + rb) * cols));
    out.insert(out.end(), a.data().begin(), a.data().end());
    out.insert(out.end(), b.data().begin(), b.data().end());

    auto pa = a.ptr();
    auto pb = b.ptr();
    auto backprop = [pa, pb, ra, rb, cols](detail::Node<T>& n) {
        const std::size_t na = static_cast<std::size_t>(ra * cols);
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < na; ++i) pa->grad[i] += n.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < static_cast<std::size_t>(rb * cols); ++i)
                pb->grad[i] += n.grad[na + i];
        }
    };
    return detail::make_result<T>({ra + rb, cols}, std::move(out), {a, b}, std::move(backprop));
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

// Reverse-mode sweep from a scalar loss. Accumulates into the grad of every
// reachable tracked leaf; the interior of the graph is torn down afterwards,
// so each forward pass supports exactly one backward. Successive
// forward+backward passes keep accumulating into leaf grads until
// zero_grad() is called on the leaves.
template <typename T>
void backward(const Tensor<T>& loss) {
    if (loss.size() != 1)
        throw PreconditionError("backward requires a scalar loss, got shape " +
                                shape_str(loss.shape()));
    if (!loss.requires_grad()) return; // detached from every parameter: all grads stay zero

    using Node = detail::Node<T>;
    // Iterative DFS post-order; reversed it is a topological order with the
    // loss first and every node ahead of its parents.
    std::vector<Node*> order;
    std::vector<std::pair<Node*, std::size_t>> stack;
    std::vector<Node*> seen;
    auto mark_seen = [&seen](Node* n) {
        seen.push_back(n);
        return true;
    };
    auto is_seen = [&seen](Node* n) {
        return std::find(seen.begin(), seen.end(), n) != seen.end();
    };
    // A hash set would be asymptotically better; graphs here are small
    // (hundreds of nodes), so a vector scan is fine and deterministic.
    Node* root = &loss.node();
    if (!is_seen(root)) mark_seen(root);
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && !is_seen(p)) {
                mark_seen(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) {
            n->ensure_grad();
            n->backprop(*n);
        }
    }
    // Free the tape: interior nodes drop parents, closures and grads.
    for (Node* n : order) {
        if (!n->leaf) {
            n->parents.clear();
            n->backprop = nullptr;
            n->grad.clear();
            n->grad.shrink_to_fit();
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient verification (64-bit only)
// ---------------------------------------------------------------------------

// Central-difference check of a scalar function against its reverse-mode
// gradients. Returns max over coordinates of
//   |analytic - central| / (|analytic| + |central| + 1e-12).
template <typename F>
double grad_check(F&& f, std::vector<Tensor<double>> params, double h = 1e-5) {
    for (auto& p : params) p.zero_grad();
    Tensor<double> loss = f();
    if (!std::isfinite(loss.value())) throw NumericError("grad_check: non-finite loss");
    backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.grad());

    double max_err = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& values = params[pi].data_mut();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double fp = f().value();
            values[i] = saved - h;
            const double fm = f().value();
            values[i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("grad_check: non-finite probe evaluation");
            const double central = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][i];
            const double err = std::abs(a - central) / (std::abs(a) + std::abs(central) + 1e-12);
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

// ---------------------------------------------------------------------------
// Random tensors
// ---------------------------------------------------------------------------

// I.i.d. standard normal draws in row-major order; deterministic given rng.
template <typename T = float>
Tensor<T> gaussian_sample(Rng& rng, Shape shape) {
    std::vector<T> out(static_cast<std::size_t>(numel(shape)));
    for (auto& v : out) v = static_cast<T>(rng.normal());
    return Tensor<T>(std::move(shape), std::move(out));
}

// Throws NumericError naming `context` if any element is non-finite.
template <typename T>
void assert_finite(const Tensor<T>& t, const std::string& context) {
    for (const T v : t.data())
        if (!std::isfinite(static_cast<double>(v)))
            throw NumericError("non-finite value in " + context);
}

} // namespace simvae
