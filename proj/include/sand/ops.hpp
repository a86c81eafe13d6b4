#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sand/tensor.hpp"

namespace sand {

namespace detail {

/// Wires an output tensor into the graph. The node is recorded only when some
/// input requires a gradient; otherwise the result is a plain constant.
inline Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                      std::function<void(TensorData&)> backward_fn) {
    bool needs_grad = false;
    for (const Tensor& t : inputs) needs_grad = needs_grad || t.requires_grad();
    Tensor out = Tensor::from(std::move(shape), std::move(values));
    if (needs_grad) {
        out.set_requires_grad(true);
        TensorData& d = *out.impl();
        d.parents.reserve(inputs.size());
        for (const Tensor& t : inputs) d.parents.push_back(t.impl());
        d.backward_fn = std::move(backward_fn);
    }
    return out;
}

// Broadcast forms for binary elementwise ops. Only row-broadcast between a
// (batch x n) matrix and an (n) vector is supported.
enum class Broadcast { Exact, VecOnRight, VecOnLeft };

inline Broadcast resolve_broadcast(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return Broadcast::Exact;
    if (a.rank() == 2 && b.rank() == 1 && a.shape()[1] == b.shape()[0])
        return Broadcast::VecOnRight;
    if (a.rank() == 1 && b.rank() == 2 && b.shape()[1] == a.shape()[0])
        return Broadcast::VecOnLeft;
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
}

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

inline double alpha_total(std::span<const double> a, double alpha) {
    double total = 0.0;
    for (double v : a) total += std::pow(std::abs(v), alpha);
    return total;
}

inline double alpha_norm_value(std::span<const double> a, double alpha) {
    return std::pow(alpha_total(a, alpha), 1.0 / alpha);
}

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0])
        throw DimensionError("matmul: incompatible shapes " + detail::shape_str(a.shape()) +
                             " and " + detail::shape_str(b.shape()));
    const std::size_t m = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(m * q, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < p; ++k) {
            const double aik = av[i * p + k];
            for (std::size_t j = 0; j < q; ++j) out[i * q + j] += aik * bv[k * q + j];
        }
    return detail::make_op({m, q}, std::move(out), {a, b}, [m, p, q](TensorData& self) {
        const auto& g = self.grad;
        TensorData& A = *self.parents[0];
        TensorData& B = *self.parents[1];
        if (A.requires_grad) {
            auto& ag = detail::grad_buf(A);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < p; ++k) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < q; ++j) s += g[i * q + j] * B.values[k * q + j];
                    ag[i * p + k] += s;
                }
        }
        if (B.requires_grad) {
            auto& bg = detail::grad_buf(B);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < p; ++k) {
                    const double aik = A.values[i * p + k];
                    for (std::size_t j = 0; j < q; ++j) bg[k * q + j] += aik * g[i * q + j];
                }
        }
    });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    const auto kind = detail::resolve_broadcast(a, b, "add");
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out;
    Shape shape;
    if (kind == detail::Broadcast::Exact) {
        shape = a.shape();
        out.resize(av.size());
        for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    } else {
        const Tensor& mat = (kind == detail::Broadcast::VecOnRight) ? a : b;
        const Tensor& vec = (kind == detail::Broadcast::VecOnRight) ? b : a;
        const std::size_t rows = mat.shape()[0], n = mat.shape()[1];
        shape = {rows, n};
        out.resize(rows * n);
        const auto mv = mat.values();
        const auto vv = vec.values();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] = mv[i * n + j] + vv[j];
    }
    return detail::make_op(std::move(shape), std::move(out), {a, b}, [kind](TensorData& self) {
        const auto& g = self.grad;
        TensorData& A = *self.parents[0];
        TensorData& B = *self.parents[1];
        auto spread = [&g](TensorData& t, bool is_vec, std::size_t n) {
            if (!t.requires_grad) return;
            auto& tg = detail::grad_buf(t);
            if (!is_vec) {
                for (std::size_t i = 0; i < g.size(); ++i) tg[i] += g[i];
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) tg[i % n] += g[i];
            }
        };
        const std::size_t n = self.shape.back();
        spread(A, kind == detail::Broadcast::VecOnLeft, n);
        spread(B, kind == detail::Broadcast::VecOnRight, n);
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    const auto kind = detail::resolve_broadcast(a, b, "sub");
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out;
    Shape shape;
    if (kind == detail::Broadcast::Exact) {
        shape = a.shape();
        out.resize(av.size());
        for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
    } else if (kind == detail::Broadcast::VecOnRight) {
        const std::size_t rows = a.shape()[0], n = a.shape()[1];
        shape = {rows, n};
        out.resize(rows * n);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] - bv[j];
    } else {
        const std::size_t rows = b.shape()[0], n = b.shape()[1];
        shape = {rows, n};
        out.resize(rows * n);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[j] - bv[i * n + j];
    }
    return detail::make_op(std::move(shape), std::move(out), {a, b}, [kind](TensorData& self) {
        const auto& g = self.grad;
        TensorData& A = *self.parents[0];
        TensorData& B = *self.parents[1];
        const std::size_t n = self.shape.back();
        auto spread = [&g, n](TensorData& t, bool is_vec, double sign) {
            if (!t.requires_grad) return;
            auto& tg = detail::grad_buf(t);
            if (!is_vec) {
                for (std::size_t i = 0; i < g.size(); ++i) tg[i] += sign * g[i];
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) tg[i % n] += sign * g[i];
            }
        };
        spread(A, kind == detail::Broadcast::VecOnLeft, 1.0);
        spread(B, kind == detail::Broadcast::VecOnRight, -1.0);
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    const auto kind = detail::resolve_broadcast(a, b, "mul");
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out;
    Shape shape;
    if (kind == detail::Broadcast::Exact) {
        shape = a.shape();
        out.resize(av.size());
        for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    } else {
        const Tensor& mat = (kind == detail::Broadcast::VecOnRight) ? a : b;
        const Tensor& vec = (kind == detail::Broadcast::VecOnRight) ? b : a;
        const std::size_t rows = mat.shape()[0], n = mat.shape()[1];
        shape = {rows, n};
        out.resize(rows * n);
        const auto mv = mat.values();
        const auto vv = vec.values();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] = mv[i * n + j] * vv[j];
    }
    return detail::make_op(std::move(shape), std::move(out), {a, b}, [kind](TensorData& self) {
        const auto& g = self.grad;
        TensorData& A = *self.parents[0];
        TensorData& B = *self.parents[1];
        if (kind == detail::Broadcast::Exact) {
            if (A.requires_grad) {
                auto& ag = detail::grad_buf(A);
                for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * B.values[i];
            }
            if (B.requires_grad) {
                auto& bg = detail::grad_buf(B);
                for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i] * A.values[i];
            }
            return;
        }
        TensorData& mat = (kind == detail::Broadcast::VecOnRight) ? A : B;
        TensorData& vec = (kind == detail::Broadcast::VecOnRight) ? B : A;
        const std::size_t n = self.shape.back();
        if (mat.requires_grad) {
            auto& mg = detail::grad_buf(mat);
            for (std::size_t i = 0; i < g.size(); ++i) mg[i] += g[i] * vec.values[i % n];
        }
        if (vec.requires_grad) {
            auto& vg = detail::grad_buf(vec);
            for (std::size_t i = 0; i < g.size(); ++i) vg[i % n] += g[i] * mat.values[i];
        }
    });
}

inline Tensor scalar_mul(const Tensor& x, double c) {
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = c * xv[i];
    return detail::make_op(x.shape(), std::move(out), {x}, [c](TensorData& self) {
        TensorData& X = *self.parents[0];
        if (!X.requires_grad) return;
        auto& xg = detail::grad_buf(X);
        for (std::size_t i = 0; i < self.grad.size(); ++i) xg[i] += c * self.grad[i];
    });
}

/// Elementwise division by a scalar tensor; gradient flows to both operands.
inline Tensor div_scalar(const Tensor& x, const Tensor& s) {
    if (!s.is_scalar()) throw ContractError("div_scalar: divisor must be a scalar tensor");
    const double sv = s.value();
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] / sv;
    return detail::make_op(x.shape(), std::move(out), {x, s}, [](TensorData& self) {
        TensorData& X = *self.parents[0];
        TensorData& S = *self.parents[1];
        const double sv = S.values[0];
        if (X.requires_grad) {
            auto& xg = detail::grad_buf(X);
            for (std::size_t i = 0; i < self.grad.size(); ++i) xg[i] += self.grad[i] / sv;
        }
        if (S.requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                acc += self.grad[i] * X.values[i];
            detail::grad_buf(S)[0] += -acc / (sv * sv);
        }
    });
}

inline Tensor relu(const Tensor& x) {
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    return detail::make_op(x.shape(), std::move(out), {x}, [](TensorData& self) {
        TensorData& X = *self.parents[0];
        if (!X.requires_grad) return;
        auto& xg = detail::grad_buf(X);
        // subgradient at exactly 0 is 0
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (X.values[i] > 0.0) xg[i] += self.grad[i];
    });
}

inline Tensor square(const Tensor& x) {
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * xv[i];
    return detail::make_op(x.shape(), std::move(out), {x}, [](TensorData& self) {
        TensorData& X = *self.parents[0];
        if (!X.requires_grad) return;
        auto& xg = detail::grad_buf(X);
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            xg[i] += 2.0 * X.values[i] * self.grad[i];
    });
}

inline Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    return detail::make_op({1}, {total}, {x}, [](TensorData& self) {
        TensorData& X = *self.parents[0];
        if (!X.requires_grad) return;
        auto& xg = detail::grad_buf(X);
        const double g = self.grad[0];
        for (double& v : xg) v += g;
    });
}

inline Tensor mean(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    const double inv_n = 1.0 / static_cast<double>(x.numel());
    return detail::make_op({1}, {total * inv_n}, {x}, [inv_n](TensorData& self) {
        TensorData& X = *self.parents[0];
        if (!X.requires_grad) return;
        auto& xg = detail::grad_buf(X);
        const double g = self.grad[0] * inv_n;
        for (double& v : xg) v += g;
    });
}

/// l_alpha norm (sum |a_i|^alpha)^(1/alpha) as a scalar graph node.
/// The zero vector has no usable gradient and is rejected.
inline Tensor alpha_norm(const Tensor& a, double alpha) {
    if (!(alpha > 0.0)) throw ContractError("alpha_norm: alpha must be positive");
    const double total = detail::alpha_total(a.values(), alpha);
    if (total == 0.0)
        throw DegenerateGainsError(
            "alpha_norm: gain vector is identically zero; re-initialize the gains");
    const double norm = std::pow(total, 1.0 / alpha);
    return detail::make_op({1}, {norm}, {a}, [alpha](TensorData& self) {
        TensorData& A = *self.parents[0];
        if (!A.requires_grad) return;
        auto& ag = detail::grad_buf(A);
        const double norm = self.values[0];
        const double g = self.grad[0];
        const double coef = std::pow(norm, 1.0 - alpha);
        for (std::size_t i = 0; i < A.values.size(); ++i) {
            const double v = A.values[i];
            const double s = detail::sgn(v);
            if (s == 0.0) continue;
            ag[i] += g * s * std::pow(std::abs(v), alpha - 1.0) * coef;
        }
    });
}

/// Mean negative log-likelihood of integer labels under softmax(logits),
/// computed with max-subtraction. Fused forward/backward.
inline Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2)
        throw DimensionError("cross_entropy: logits must be (batch x classes), got " +
                             detail::shape_str(logits.shape()));
    const std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
    if (labels.size() != batch)
        throw DimensionError("cross_entropy: got " + std::to_string(labels.size()) +
                             " labels for batch of " + std::to_string(batch));
    const auto lv = logits.values();
    std::vector<double> probs(batch * classes);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw ContractError("cross_entropy: label " + std::to_string(y) +
                                " out of range [0, " + std::to_string(classes) + ")");
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c) mx = std::max(mx, lv[i * classes + c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            probs[i * classes + c] = std::exp(lv[i * classes + c] - mx);
            denom += probs[i * classes + c];
        }
        for (std::size_t c = 0; c < classes; ++c) probs[i * classes + c] /= denom;
        loss += mx + std::log(denom) - lv[i * classes + static_cast<std::size_t>(y)];
    }
    loss /= static_cast<double>(batch);
    return detail::make_op(
        {1}, {loss}, {logits},
        [probs = std::move(probs), labels, batch, classes](TensorData& self) {
            TensorData& L = *self.parents[0];
            if (!L.requires_grad) return;
            auto& lg = detail::grad_buf(L);
            const double g = self.grad[0] / static_cast<double>(batch);
            for (std::size_t i = 0; i < batch; ++i)
                for (std::size_t c = 0; c < classes; ++c) {
                    const double onehot =
                        (static_cast<std::size_t>(labels[i]) == c) ? 1.0 : 0.0;
                    lg[i * classes + c] += g * (probs[i * classes + c] - onehot);
                }
        });
}

}  // namespace sand
