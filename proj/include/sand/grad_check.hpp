#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "sand/ops.hpp"
#include "sand/tensor.hpp"

namespace sand {

/// Compares reverse-mode gradients of a scalar-valued function against central
/// finite differences, coordinate by coordinate over every parameter.
///
/// `f` must rebuild its graph on each call and be deterministic (freeze any
/// noise draws by reseeding inside `f`). Returns the maximum over coordinates
/// of |fd - ad| / max(1e-8, |fd| + |ad|); a non-finite function value makes
/// the check fail with +infinity.
inline double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                         double h = 1e-5) {
    for (Tensor& p : params) p.zero_grad();
    Tensor root = f();
    if (!root.is_scalar()) throw ContractError("grad_check: function must return a scalar");
    backward(root);

    std::vector<std::vector<double>> autodiff_grads;
    autodiff_grads.reserve(params.size());
    for (const Tensor& p : params) {
        auto g = p.grad();
        autodiff_grads.emplace_back(g.begin(), g.end());
    }

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto vals = params[pi].values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + h;
            const double fp = f().value();
            vals[i] = orig - h;
            const double fm = f().value();
            vals[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                return std::numeric_limits<double>::infinity();
            const double fd = (fp - fm) / (2.0 * h);
            const double ad = autodiff_grads[pi][i];
            const double rel = std::abs(fd - ad) / std::max(1e-8, std::abs(fd) + std::abs(ad));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace sand
