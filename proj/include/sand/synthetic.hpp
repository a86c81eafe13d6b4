#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sand/data.hpp"
#include "sand/rng.hpp"

namespace sand {

enum class GeneratorKind { SparseLinear, NuisanceBlobs };

/// Optional linear dependence injected between two feature columns:
/// X[:, dst] = X[:, src] + noise_std * N(0, 1).
struct CorrelatedPair {
    std::size_t src = 0;
    std::size_t dst = 1;
    double noise_std = 0.05;
};

/// Full description of a synthetic dataset; the seed determines every byte of
/// the output, so specs are serialized for replay.
struct SyntheticSpec {
    GeneratorKind kind = GeneratorKind::SparseLinear;
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;

    // sparse linear regression
    std::size_t n_features = 0;
    std::vector<std::size_t> support;   // explicit planted support (optional)
    std::size_t support_size = 0;       // drawn at random when support is empty
    std::vector<double> coefficients;   // aligned with support; drawn when empty
    double coef_min = 1.0;
    double coef_max = 3.0;
    double noise_std = 0.1;
    std::optional<CorrelatedPair> correlated;

    // nuisance-augmented classification blobs
    std::size_t n_informative = 0;
    std::size_t n_nuisance = 0;
    std::size_t n_classes = 2;
    double nuisance_std = 0.31622776601683794;  // sqrt(0.1)
    double center_min_dist = 2.0;
    bool permute_columns = true;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = kind == GeneratorKind::SparseLinear ? "sparse_linear" : "nuisance_blobs";
        j["seed"] = seed;
        j["n_samples"] = n_samples;
        if (kind == GeneratorKind::SparseLinear) {
            j["n_features"] = n_features;
            if (!support.empty()) j["support"] = support;
            j["support_size"] = support.empty() ? support_size : support.size();
            if (!coefficients.empty()) j["coefficients"] = coefficients;
            j["coef_min"] = coef_min;
            j["coef_max"] = coef_max;
            j["noise_std"] = noise_std;
            if (correlated)
                j["correlated"] = {{"src", correlated->src},
                                   {"dst", correlated->dst},
                                   {"noise_std", correlated->noise_std}};
        } else {
            j["n_informative"] = n_informative;
            j["n_nuisance"] = n_nuisance;
            j["n_classes"] = n_classes;
            j["nuisance_std"] = nuisance_std;
            j["center_min_dist"] = center_min_dist;
            j["permute_columns"] = permute_columns;
        }
        return j;
    }

    static SyntheticSpec from_json(const nlohmann::json& j) {
        SyntheticSpec s;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "sparse_linear")
            s.kind = GeneratorKind::SparseLinear;
        else if (kind == "nuisance_blobs")
            s.kind = GeneratorKind::NuisanceBlobs;
        else
            throw ConfigError("unknown generator kind: " + kind);
        s.seed = j.value("seed", std::uint64_t{0});
        s.n_samples = j.at("n_samples").get<std::size_t>();
        if (s.kind == GeneratorKind::SparseLinear) {
            s.n_features = j.at("n_features").get<std::size_t>();
            if (j.contains("support")) s.support = j["support"].get<std::vector<std::size_t>>();
            s.support_size = j.value("support_size", s.support.size());
            if (j.contains("coefficients"))
                s.coefficients = j["coefficients"].get<std::vector<double>>();
            s.coef_min = j.value("coef_min", 1.0);
            s.coef_max = j.value("coef_max", 3.0);
            s.noise_std = j.value("noise_std", 0.1);
            if (j.contains("correlated")) {
                CorrelatedPair p;
                p.src = j["correlated"].at("src").get<std::size_t>();
                p.dst = j["correlated"].at("dst").get<std::size_t>();
                p.noise_std = j["correlated"].value("noise_std", 0.05);
                s.correlated = p;
            }
        } else {
            s.n_informative = j.at("n_informative").get<std::size_t>();
            s.n_nuisance = j.at("n_nuisance").get<std::size_t>();
            s.n_classes = j.value("n_classes", std::size_t{2});
            s.nuisance_std = j.value("nuisance_std", 0.31622776601683794);
            s.center_min_dist = j.value("center_min_dist", 2.0);
            s.permute_columns = j.value("permute_columns", true);
        }
        return s;
    }
};

/// Regression rows y = sum_{i in support} c_i x_i + eps with standard-normal
/// features and the planted support recorded as ground truth.
inline Dataset gen_sparse_linear(const SyntheticSpec& spec) {
    if (spec.n_samples == 0 || spec.n_features == 0)
        throw ConfigError("sparse_linear: n_samples and n_features must be positive");
    RngStream rng(spec.seed, 17);

    std::vector<std::size_t> support = spec.support;
    if (support.empty() && spec.support_size > 0) {
        if (spec.support_size > spec.n_features)
            throw ConfigError("sparse_linear: support size " +
                              std::to_string(spec.support_size) + " exceeds n = " +
                              std::to_string(spec.n_features));
        std::vector<std::size_t> all(spec.n_features);
        std::iota(all.begin(), all.end(), 0);
        rng.shuffle(all);
        support.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.support_size));
        std::sort(support.begin(), support.end());
    }
    if (support.size() > spec.n_features)
        throw ConfigError("sparse_linear: support larger than feature count");
    for (std::size_t idx : support)
        if (idx >= spec.n_features)
            throw ConfigError("sparse_linear: support index " + std::to_string(idx) +
                              " out of range");

    std::vector<double> coef = spec.coefficients;
    if (coef.empty()) {
        coef.resize(support.size());
        for (double& c : coef) {
            const double mag = rng.uniform(spec.coef_min, spec.coef_max);
            c = rng.uniform() < 0.5 ? -mag : mag;
        }
    }
    if (coef.size() != support.size())
        throw ConfigError("sparse_linear: coefficient count does not match support size");
    for (double c : coef)
        if (c == 0.0)
            throw ConfigError("sparse_linear: coefficients must be nonzero on the support");

    Dataset ds;
    ds.task = TaskKind::Regression;
    ds.n_samples = spec.n_samples;
    ds.n_features = spec.n_features;
    ds.target_dim = 1;
    ds.X.resize(spec.n_samples * spec.n_features);
    for (double& v : ds.X) v = rng.normal();
    if (spec.correlated) {
        const auto& p = *spec.correlated;
        if (p.src >= spec.n_features || p.dst >= spec.n_features || p.src == p.dst)
            throw ConfigError("sparse_linear: invalid correlated pair");
        for (std::size_t r = 0; r < spec.n_samples; ++r)
            ds.X[r * spec.n_features + p.dst] =
                ds.X[r * spec.n_features + p.src] + p.noise_std * rng.normal();
    }
    ds.targets.resize(spec.n_samples);
    for (std::size_t r = 0; r < spec.n_samples; ++r) {
        double y = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s)
            y += coef[s] * ds.X[r * spec.n_features + support[s]];
        if (spec.noise_std > 0.0) y += spec.noise_std * rng.normal();
        ds.targets[r] = y;
    }
    for (std::size_t i = 0; i < spec.n_features; ++i)
        ds.feature_names.push_back("f" + std::to_string(i));
    ds.ground_truth_support = support;
    return ds;
}

/// Class-conditional Gaussian blobs on the informative dimensions (centers
/// drawn once, pairwise distance >= center_min_dist, unit within-class std)
/// padded with class-independent N(0, nuisance_std^2) columns, then a seeded
/// column permutation. The permuted informative index set is the ground truth.
inline Dataset gen_nuisance_blobs(const SyntheticSpec& spec) {
    if (spec.n_samples == 0 || spec.n_informative == 0)
        throw ConfigError("nuisance_blobs: n_samples and n_informative must be positive");
    if (spec.n_classes < 2) throw ConfigError("nuisance_blobs: need at least 2 classes");
    const std::size_t n = spec.n_informative + spec.n_nuisance;
    RngStream rng(spec.seed, 23);

    // Rejection-sample the class centers.
    std::vector<double> centers(spec.n_classes * spec.n_informative);
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        for (double& v : centers) v = 2.0 * rng.normal();
        placed = true;
        for (std::size_t a = 0; a < spec.n_classes && placed; ++a)
            for (std::size_t b = a + 1; b < spec.n_classes && placed; ++b) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < spec.n_informative; ++j) {
                    const double d = centers[a * spec.n_informative + j] -
                                     centers[b * spec.n_informative + j];
                    d2 += d * d;
                }
                if (d2 < spec.center_min_dist * spec.center_min_dist) placed = false;
            }
    }
    if (!placed)
        throw GenerationError("nuisance_blobs: could not place " +
                              std::to_string(spec.n_classes) + " centers at distance " +
                              std::to_string(spec.center_min_dist) + " after 1000 attempts");

    Dataset ds;
    ds.task = TaskKind::Classification;
    ds.n_samples = spec.n_samples;
    ds.n_features = n;
    ds.n_classes = spec.n_classes;
    ds.X.resize(spec.n_samples * n);
    ds.labels.resize(spec.n_samples);
    for (std::size_t r = 0; r < spec.n_samples; ++r) {
        const std::size_t cls = rng.uniform_index(spec.n_classes);
        ds.labels[r] = static_cast<int>(cls);
        for (std::size_t j = 0; j < spec.n_informative; ++j)
            ds.X[r * n + j] = centers[cls * spec.n_informative + j] + rng.normal();
        for (std::size_t j = spec.n_informative; j < n; ++j)
            ds.X[r * n + j] = spec.nuisance_std * rng.normal();
    }
    for (std::size_t c = 0; c < spec.n_classes; ++c)
        ds.class_names.push_back(std::to_string(c));

    // positions[j] = final column of original column j
    std::vector<std::size_t> positions(n);
    std::iota(positions.begin(), positions.end(), 0);
    if (spec.permute_columns) {
        rng.shuffle(positions);
        std::vector<double> permuted(ds.X.size());
        for (std::size_t r = 0; r < spec.n_samples; ++r)
            for (std::size_t j = 0; j < n; ++j)
                permuted[r * n + positions[j]] = ds.X[r * n + j];
        ds.X = std::move(permuted);
    }
    for (std::size_t j = 0; j < spec.n_informative; ++j)
        ds.ground_truth_support.push_back(positions[j]);
    std::sort(ds.ground_truth_support.begin(), ds.ground_truth_support.end());
    for (std::size_t i = 0; i < n; ++i) ds.feature_names.push_back("f" + std::to_string(i));
    return ds;
}

inline Dataset generate(const SyntheticSpec& spec) {
    return spec.kind == GeneratorKind::SparseLinear ? gen_sparse_linear(spec)
                                                    : gen_nuisance_blobs(spec);
}

}  // namespace sand
