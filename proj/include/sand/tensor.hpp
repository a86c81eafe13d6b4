#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sand/error.hpp"

namespace sand {

using Shape = std::vector<std::size_t>;

namespace detail {

inline std::uint64_t next_tensor_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    out += ")";
    return out;
}

}  // namespace detail

/// Shared storage of a tensor plus its record in the computation graph.
/// Nodes carry a strictly increasing creation id; because an operation's
/// inputs always exist before its output, creation order is a topological
/// order of the graph and backward() can simply walk ids in reverse.
struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated during backward; same length as values
    bool requires_grad = false;
    std::uint64_t id = detail::next_tensor_id();
    std::vector<std::shared_ptr<TensorData>> parents;
    // Reads this node's grad and accumulates into the parents' grads.
    std::function<void(TensorData&)> backward_fn;
};

namespace detail {

inline std::vector<double>& grad_buf(TensorData& t) {
    if (t.grad.size() != t.values.size()) t.grad.assign(t.values.size(), 0.0);
    return t.grad;
}

}  // namespace detail

/// Dense 64-bit tensor handle. Copies share storage; operations defined in
/// ops.hpp build a fresh define-by-run graph on every forward pass.
class Tensor {
public:
    Tensor() : data_(std::make_shared<TensorData>()) {}
    explicit Tensor(std::shared_ptr<TensorData> data) : data_(std::move(data)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return filled(std::move(shape), 0.0, requires_grad);
    }

    static Tensor filled(Shape shape, double value, bool requires_grad = false) {
        auto d = std::make_shared<TensorData>();
        d->shape = std::move(shape);
        d->values.assign(detail::shape_numel(d->shape), value);
        d->requires_grad = requires_grad;
        return Tensor(std::move(d));
    }

    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
        if (values.size() != detail::shape_numel(shape))
            throw DimensionError("tensor values length " + std::to_string(values.size()) +
                                 " does not match shape " + detail::shape_str(shape));
        auto d = std::make_shared<TensorData>();
        d->shape = std::move(shape);
        d->values = std::move(values);
        d->requires_grad = requires_grad;
        return Tensor(std::move(d));
    }

    static Tensor scalar(double value, bool requires_grad = false) {
        return from({1}, {value}, requires_grad);
    }

    const Shape& shape() const { return data_->shape; }
    std::size_t numel() const { return data_->values.size(); }
    std::size_t rank() const { return data_->shape.size(); }
    bool is_scalar() const { return numel() == 1; }

    std::size_t rows() const { return rank() == 2 ? data_->shape[0] : 1; }
    std::size_t cols() const {
        return rank() == 2 ? data_->shape[1] : (rank() == 1 ? data_->shape[0] : 1);
    }

    std::span<double> values() { return data_->values; }
    std::span<const double> values() const { return data_->values; }

    double value() const {
        if (!is_scalar()) throw ContractError("value() requires a scalar tensor");
        return data_->values[0];
    }

    bool requires_grad() const { return data_->requires_grad; }
    void set_requires_grad(bool rg) { data_->requires_grad = rg; }

    bool has_grad() const { return data_->grad.size() == data_->values.size(); }
    std::span<const double> grad() const {
        if (!has_grad()) throw ContractError("tensor has no gradient; run backward first");
        return data_->grad;
    }

    void zero_grad() { data_->grad.assign(data_->values.size(), 0.0); }

    bool is_leaf() const { return !data_->backward_fn; }

    const std::shared_ptr<TensorData>& impl() const { return data_; }

private:
    std::shared_ptr<TensorData> data_;
};

/// Reverse-mode sweep from a scalar root. Every node reachable through the
/// parents links is visited exactly once, in reverse creation order.
///
/// Non-leaf gradients are always reset before the sweep; leaf gradients are
/// reset too unless `accumulate` is set, so running backward twice with
/// accumulate doubles the leaf gradients.
inline void backward(const Tensor& root, bool accumulate = false) {
    if (!root.is_scalar())
        throw ContractError("backward requires a scalar root, got shape " +
                            detail::shape_str(root.shape()));
    TensorData* root_data = root.impl().get();
    if (!root_data->requires_grad) return;  // constant root: nothing to do

    // Collect the reachable subgraph.
    std::vector<TensorData*> reachable;
    std::unordered_set<TensorData*> seen;
    std::vector<TensorData*> stack{root_data};
    seen.insert(root_data);
    while (!stack.empty()) {
        TensorData* node = stack.back();
        stack.pop_back();
        reachable.push_back(node);
        for (const auto& p : node->parents) {
            if (seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }

    std::sort(reachable.begin(), reachable.end(),
              [](const TensorData* a, const TensorData* b) { return a->id > b->id; });

    for (TensorData* node : reachable) {
        if (!node->requires_grad) continue;
        bool is_leaf = !node->backward_fn;
        if (!is_leaf || !accumulate || node->grad.size() != node->values.size()) {
            node->grad.assign(node->values.size(), 0.0);
        }
    }

    detail::grad_buf(*root_data)[0] += 1.0;

    for (TensorData* node : reachable) {
        if (node->backward_fn && node->requires_grad) node->backward_fn(*node);
    }
}

}  // namespace sand
