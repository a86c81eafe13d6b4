#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sand/ops.hpp"
#include "sand/rng.hpp"
#include "sand/tensor.hpp"

namespace sand {

enum class LayerMode { Training, Eval, Finalized };

/// Outcome of finalizing a selection layer: which features survived, the
/// effective gain vector at that point, and how polarized the gains were.
struct SelectionReport {
    std::vector<std::size_t> selected_indices;  // ascending
    std::vector<double> gains;                  // effective gains at finalization
    double polarization = 0.0;
    std::size_t k = 0;
    double sigma = 0.0;
    double alpha = 2.0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"selected_indices", selected_indices},
                              {"gains", gains},
                              {"polarization", polarization},
                              {"k", k},
                              {"sigma", sigma},
                              {"alpha", alpha}};
    }
};

/// Rescales raw gains so that the effective vector satisfies
/// sum_i |g_i|^alpha = k. Pure vector form; the layer builds the identical
/// expression as a differentiable graph.
inline std::vector<double> normalize_gains(std::span<const double> a, double alpha,
                                           std::size_t k) {
    if (!(alpha > 0.0)) throw ContractError("normalize_gains: alpha must be positive");
    if (k > a.size())
        throw ContractError("normalize_gains: k = " + std::to_string(k) +
                            " exceeds gain count " + std::to_string(a.size()));
    const double norm = detail::alpha_norm_value(a, alpha);
    if (!(norm > 1e-12))
        throw DegenerateGainsError(
            "normalize_gains: gain norm " + std::to_string(norm) +
            " is numerically zero; re-initialize the gains and restart training");
    const double kpow = std::pow(static_cast<double>(k), 1.0 / alpha);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] * kpow) / norm;
    return out;
}

/// Mean of min(g, 1-g): 0 iff every gain is exactly 0 or 1, maximal (0.5) when
/// all gains sit at 0.5. Gains must lie in [0, 1].
inline double polarization(std::span<const double> gains) {
    if (gains.empty()) throw ContractError("polarization: empty gain vector");
    double acc = 0.0;
    for (double g : gains) {
        if (g < -1e-9 || g > 1.0 + 1e-9)
            throw ContractError("polarization: gain " + std::to_string(g) +
                                " outside [0, 1]");
        const double c = std::clamp(g, 0.0, 1.0);
        acc += std::min(c, 1.0 - c);
    }
    return acc / static_cast<double>(gains.size());
}

/// Feature-selection layer: multiplies each input feature by a trainable gain
/// and adds zero-mean Gaussian noise scaled by (1 - gain), with the gain
/// vector renormalized inside the forward pass so its l_alpha norm stays at
/// k^(1/alpha). Training drives k gains toward 1 and the rest toward 0; the
/// top-k mask is frozen once at the end, with no retraining required.
class SandLayer {
public:
    SandLayer(std::size_t n, std::size_t k, double sigma, double alpha)
        : n_(n), k_(k), sigma_(sigma), alpha_(alpha) {
        if (n == 0) throw ContractError("sand layer: feature count must be positive");
        if (k < 1 || k > n)
            throw ConfigError("k must satisfy 1 <= k <= n (k = " + std::to_string(k) +
                              ", n = " + std::to_string(n) + ")");
        if (sigma < 0.0) throw ConfigError("sigma must be nonnegative");
        if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
        // Symmetric feasible start: all gains at (k/n)^(1/alpha) already satisfy
        // the norm constraint.
        const double init =
            std::pow(static_cast<double>(k) / static_cast<double>(n), 1.0 / alpha);
        raw_gains_ = Tensor::filled({n}, init, /*requires_grad=*/true);
    }

    std::size_t feature_count() const { return n_; }
    std::size_t k() const { return k_; }
    double sigma() const { return sigma_; }
    double alpha() const { return alpha_; }
    LayerMode mode() const { return mode_; }

    Tensor& raw_gains() { return raw_gains_; }
    const Tensor& raw_gains() const { return raw_gains_; }

    void set_mode(LayerMode m) {
        if (m == LayerMode::Finalized)
            throw ContractError("Finalized mode is entered through finalize_selection");
        mode_ = m;
    }

    /// Effective gains: the normalized raw gains. Satisfies the norm
    /// constraint; individual entries may transiently exceed 1 mid-training.
    std::vector<double> effective_gains() const {
        return normalize_gains(raw_gains_.values(), alpha_, k_);
    }

    /// Effective gains clamped to [0, 1], the form recorded in trajectories
    /// and fed to the polarization metric.
    std::vector<double> snapshot_gains() const {
        std::vector<double> g = effective_gains();
        for (double& v : g) v = std::clamp(v, 0.0, 1.0);
        return g;
    }

    /// Forward pass. Training mode distorts each feature with fresh Gaussian
    /// noise; Eval mode applies the normalized gains only; Finalized mode
    /// zeroes unselected features exactly.
    Tensor forward(const Tensor& x, NoiseSource& noise) {
        if (x.rank() != 2 || x.shape()[1] != n_)
            throw DimensionError("sand layer: input shape " + detail::shape_str(x.shape()) +
                                 " does not match feature count " + std::to_string(n_));
        if (mode_ == LayerMode::Finalized) {
            if (mask_.size() != n_)
                throw ContractError("sand layer: Finalized mode before finalize_selection");
            std::vector<double> gains = effective_gains();
            for (std::size_t i = 0; i < n_; ++i)
                if (!mask_[i]) gains[i] = 0.0;
            Tensor g = Tensor::from({n_}, std::move(gains));
            return mul(x, g);
        }

        Tensor effective = normalized_gains_node();
        if (mode_ == LayerMode::Eval || sigma_ == 0.0) return mul(x, effective);

        const std::size_t batch = x.shape()[0];
        std::vector<double> z(batch * n_);
        noise.fill(z, sigma_);
        Tensor z_t = Tensor::from({batch, n_}, std::move(z));
        Tensor ones = Tensor::filled({n_}, 1.0);
        // Gradient reaches the gains through both the signal and noise terms.
        return add(mul(x, effective), mul(z_t, sub(ones, effective)));
    }

    /// Clamps raw gains into [0, 1]. Called after every optimizer step; the
    /// clamp is not part of the differentiated graph.
    void clip_gains() {
        for (double& v : raw_gains_.values()) v = std::clamp(v, 0.0, 1.0);
    }

    /// Keeps the k largest effective gains (lowest index wins ties), zeroes
    /// the rest for good, and switches the layer to Finalized mode.
    SelectionReport finalize_selection() {
        if (mode_ == LayerMode::Finalized)
            throw ContractError("finalize_selection: layer already finalized");
        std::vector<double> effective = effective_gains();
        std::vector<std::size_t> order(n_);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (effective[a] != effective[b]) return effective[a] > effective[b];
            return a < b;
        });
        mask_.assign(n_, 0);
        for (std::size_t i = 0; i < k_; ++i) mask_[order[i]] = 1;
        mode_ = LayerMode::Finalized;

        SelectionReport report;
        report.k = k_;
        report.sigma = sigma_;
        report.alpha = alpha_;
        report.gains = effective;
        for (std::size_t i = 0; i < n_; ++i)
            if (mask_[i]) report.selected_indices.push_back(i);
        std::vector<double> clamped = effective;
        for (double& v : clamped) v = std::clamp(v, 0.0, 1.0);
        report.polarization = polarization(clamped);
        return report;
    }

    const std::vector<std::uint8_t>& mask() const {
        if (mask_.size() != n_) throw ContractError("mask is defined only once finalized");
        return mask_;
    }

    void restore_mask(std::vector<std::uint8_t> mask) {
        if (mask.size() != n_) throw DimensionError("mask length does not match layer");
        mask_ = std::move(mask);
        mode_ = LayerMode::Finalized;
    }

private:
    // Differentiable normalization: a * k^(1/alpha) / ||a||_alpha. Uses the
    // same scalar helpers as the vector form so both paths agree bitwise.
    Tensor normalized_gains_node() {
        const double norm_probe = detail::alpha_norm_value(raw_gains_.values(), alpha_);
        if (!(norm_probe > 1e-12))
            throw DegenerateGainsError(
                "sand layer: gain norm collapsed to zero; re-initialize the gains");
        Tensor norm = alpha_norm(raw_gains_, alpha_);
        const double kpow = std::pow(static_cast<double>(k_), 1.0 / alpha_);
        return div_scalar(scalar_mul(raw_gains_, kpow), norm);
    }

    std::size_t n_;
    std::size_t k_;
    double sigma_;
    double alpha_;
    LayerMode mode_ = LayerMode::Training;
    Tensor raw_gains_;
    std::vector<std::uint8_t> mask_;
};

}  // namespace sand
