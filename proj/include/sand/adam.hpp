#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sand/tensor.hpp"

namespace sand {

/// Bias-corrected Adam moments for a fixed, ordered parameter list.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    explicit AdamState(const std::vector<std::pair<std::string, Tensor>>& params) {
        m.reserve(params.size());
        v.reserve(params.size());
        for (const auto& [name, p] : params) {
            (void)name;
            m.emplace_back(p.numel(), 0.0);
            v.emplace_back(p.numel(), 0.0);
        }
    }
};

/// One in-place Adam update over all parameters. Parameters whose gradient
/// was never produced this step are treated as having zero gradient.
inline void adam_step(std::vector<std::pair<std::string, Tensor>>& params, AdamState& state,
                      double lr) {
    if (params.size() != state.m.size())
        throw ContractError("adam_step: state does not match parameter list");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& [name, p] = params[pi];
        auto vals = p.values();
        const bool has_grad = p.has_grad();
        auto g = has_grad ? p.grad() : std::span<const double>{};
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double gi = has_grad ? g[i] : 0.0;
            if (!std::isfinite(gi))
                throw NumericError("adam_step: non-finite gradient in parameter '" + name +
                                   "' at index " + std::to_string(i));
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            vals[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace sand
