#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sand/model.hpp"
#include "sand/ops.hpp"
#include "sand/tensor.hpp"

namespace sand {

enum class LossKind { CrossEntropy, MeanSquaredError };

inline void validate_loss_task(LossKind loss, TaskKind task) {
    const bool ok = (loss == LossKind::CrossEntropy && task == TaskKind::Classification) ||
                    (loss == LossKind::MeanSquaredError && task == TaskKind::Regression);
    if (!ok) throw ContractError("loss kind does not match task kind");
}

inline LossKind loss_for_task(TaskKind task) {
    return task == TaskKind::Classification ? LossKind::CrossEntropy
                                            : LossKind::MeanSquaredError;
}

/// Mean squared error over all elements, as a differentiable scalar.
inline Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw DimensionError("mse: shapes " + detail::shape_str(pred.shape()) + " and " +
                             detail::shape_str(target.shape()) + " differ");
    return mean(square(sub(pred, target)));
}

inline double mse_metric(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) throw DimensionError("mse: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

inline double mae_metric(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) throw DimensionError("mae: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - target[i]);
    return acc / static_cast<double>(pred.size());
}

/// Fraction of rows whose argmax logit (lowest index on ties) matches the label.
inline double accuracy_metric(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2)
        throw DimensionError("accuracy: logits must be (batch x classes)");
    const std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
    if (labels.size() != batch) throw DimensionError("accuracy: label count mismatch");
    const auto lv = logits.values();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch; ++i) {
        std::size_t best = 0;
        double best_v = lv[i * classes];
        for (std::size_t c = 1; c < classes; ++c)
            if (lv[i * classes + c] > best_v) {
                best_v = lv[i * classes + c];
                best = c;
            }
        if (best == static_cast<std::size_t>(labels[i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(batch);
}

/// Row-wise softmax of a logits matrix (plain values, no graph).
inline std::vector<double> softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2)
        throw DimensionError("softmax_rows: logits must be (batch x classes)");
    const std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
    const auto lv = logits.values();
    std::vector<double> out(batch * classes);
    for (std::size_t i = 0; i < batch; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c) mx = std::max(mx, lv[i * classes + c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            out[i * classes + c] = std::exp(lv[i * classes + c] - mx);
            denom += out[i * classes + c];
        }
        for (std::size_t c = 0; c < classes; ++c) out[i * classes + c] /= denom;
    }
    return out;
}

}  // namespace sand
