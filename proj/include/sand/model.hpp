#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sand/ops.hpp"
#include "sand/rng.hpp"
#include "sand/tensor.hpp"

namespace sand {

enum class TaskKind { Classification, Regression };

inline std::string task_name(TaskKind t) {
    return t == TaskKind::Classification ? "classification" : "regression";
}

/// Reference architecture width: a third of the input dimension, rounded half
/// up, never below 1.
inline std::size_t default_hidden_width(std::size_t n) {
    const auto h = static_cast<std::size_t>(std::floor(static_cast<double>(n) / 3.0 + 0.5));
    return h < 1 ? 1 : h;
}

struct MlpConfig {
    std::size_t input_dim = 0;
    std::size_t output_dim = 1;
    TaskKind task = TaskKind::Classification;
    std::optional<std::size_t> hidden_width;  // defaults to n/3
    bool linear = false;  // replace the hidden layer with identity (x.W + b)
};

/// One-hidden-layer ReLU network: relu(x.W1 + b1).W2 + b2, emitting logits
/// for classification and raw values for regression. The `linear` flag swaps
/// the hidden layer for identity, leaving a plain affine model.
class MlpModel {
public:
    MlpModel(MlpConfig cfg, RngStream& init) : cfg_(cfg) {
        if (cfg_.input_dim == 0 || cfg_.output_dim == 0)
            throw ConfigError("model dimensions must be positive");
        if (cfg_.linear) {
            W2_ = glorot(cfg_.input_dim, cfg_.output_dim, init);
            b2_ = Tensor::zeros({cfg_.output_dim}, true);
            return;
        }
        const std::size_t h = cfg_.hidden_width.value_or(default_hidden_width(cfg_.input_dim));
        if (h == 0) throw ConfigError("hidden width must be positive");
        hidden_ = h;
        W1_ = glorot(cfg_.input_dim, h, init);
        b1_ = Tensor::zeros({h}, true);
        W2_ = glorot(h, cfg_.output_dim, init);
        b2_ = Tensor::zeros({cfg_.output_dim}, true);
    }

    Tensor forward(const Tensor& x) const {
        if (x.rank() != 2 || x.shape()[1] != cfg_.input_dim)
            throw DimensionError("mlp forward: input shape " + detail::shape_str(x.shape()) +
                                 " does not match input dim " +
                                 std::to_string(cfg_.input_dim));
        if (cfg_.linear) return add(matmul(x, W2_), b2_);
        return add(matmul(relu(add(matmul(x, W1_), b1_)), W2_), b2_);
    }

    std::vector<std::pair<std::string, Tensor>> parameters() {
        if (cfg_.linear) return {{"W", W2_}, {"b", b2_}};
        return {{"W1", W1_}, {"b1", b1_}, {"W2", W2_}, {"b2", b2_}};
    }

    const MlpConfig& config() const { return cfg_; }
    std::size_t hidden_width() const { return hidden_; }

private:
    static Tensor glorot(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::vector<double> w(fan_in * fan_out);
        for (double& v : w) v = rng.uniform(-bound, bound);
        return Tensor::from({fan_in, fan_out}, std::move(w), /*requires_grad=*/true);
    }

    MlpConfig cfg_;
    std::size_t hidden_ = 0;
    Tensor W1_, b1_, W2_, b2_;
};

}  // namespace sand
