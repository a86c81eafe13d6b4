#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sand/adam.hpp"
#include "sand/data.hpp"
#include "sand/layer.hpp"
#include "sand/metrics.hpp"
#include "sand/model.hpp"
#include "sand/rng.hpp"

namespace sand {

struct SplitFractions {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    double sigma = 1.5;
    double alpha = 2.0;
    std::size_t trajectory_every = 10;
    SplitFractions split;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (trajectory_every < 1) throw ConfigError("trajectory_every must be >= 1");
        const double total = split.train + split.val + split.test;
        if (std::abs(total - 1.0) > 1e-9)
            throw ConfigError("split fractions must sum to 1, got " + std::to_string(total));
        if (split.train <= 0.0 || split.val <= 0.0 || split.test <= 0.0)
            throw ConfigError("split fractions must be positive");
    }
};

struct TrainOptions {
    bool use_sand = true;
    bool linear_model = false;  // identity hidden layer
    std::optional<std::size_t> hidden_width;
};

struct DatasetSplit {
    std::vector<std::size_t> train, val, test;
};

/// Seeded permutation split. Validation and test get floor(frac * N) rows
/// each; remainder rows go to training. Throws if any part comes out empty.
inline DatasetSplit split_dataset(std::size_t n_samples, const SplitFractions& fr,
                                  std::uint64_t seed) {
    if (n_samples == 0) throw ConfigError("cannot split an empty dataset");
    std::vector<std::size_t> perm(n_samples);
    std::iota(perm.begin(), perm.end(), 0);
    RngStream rng(seed, rngstream::kSplit);
    rng.shuffle(perm);

    const auto n = static_cast<double>(n_samples);
    const auto n_train_floor = static_cast<std::size_t>(std::floor(fr.train * n));
    const auto n_val = static_cast<std::size_t>(std::floor(fr.val * n));
    const auto n_test = static_cast<std::size_t>(std::floor(fr.test * n));
    const std::size_t n_train = n_samples - n_val - n_test;  // remainder joins train
    if (n_train < n_train_floor)
        throw ConfigError("split fractions produce an inconsistent partition");
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw ConfigError("dataset of " + std::to_string(n_samples) +
                          " rows produces an empty split");

    DatasetSplit out;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                   perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
    return out;
}

struct TrajectoryRow {
    std::size_t epoch = 0;
    std::vector<double> sorted_gains;  // descending, clamped to [0, 1]
};

struct MetricRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_metric = 0.0;
};

struct TrainResult {
    SelectionReport selection;
    double val_metric_final = 0.0;
    double test_metric_masked = 0.0;
    double test_metric_unmasked = 0.0;
    std::vector<TrajectoryRow> trajectory;
    std::vector<MetricRow> metrics;
    std::string metric_name;  // "accuracy" or "mae"
    TrainConfig config;
    TrainOptions options;
    std::size_t resolved_hidden_width = 0;

    nlohmann::json config_json() const {
        return nlohmann::json{
            {"epochs", config.epochs},
            {"batch_size", config.batch_size},
            {"learning_rate", config.learning_rate},
            {"seed", config.seed},
            {"k", config.k},
            {"sigma", config.sigma},
            {"alpha", config.alpha},
            {"trajectory_every", config.trajectory_every},
            {"split",
             {{"train", config.split.train}, {"val", config.split.val}, {"test", config.split.test}}},
            {"use_sand", options.use_sand},
            {"linear_model", options.linear_model},
            {"hidden_width", resolved_hidden_width}};
    }

    nlohmann::json to_report_json() const {
        nlohmann::json j = selection.to_json();
        j["test_metric_masked"] = test_metric_masked;
        j["test_metric_unmasked"] = test_metric_unmasked;
        j["val_metric_final"] = val_metric_final;
        j["metric_name"] = metric_name;
        j["config"] = config_json();
        return j;
    }
};

/// State of one training run: model, selection layer, and the three
/// independent seeded streams (init / shuffle / noise) derived from the
/// config seed. Identical config implies bit-identical logs.
struct TrainRun {
    TrainConfig config;
    TrainOptions options;
    MlpModel model;
    std::optional<SandLayer> layer;
    RngStream shuffle_stream;
    NoiseSource noise;
    std::vector<TrajectoryRow> trajectory;
    std::vector<MetricRow> metrics;

    TrainRun(TrainConfig cfg, const Dataset& data, TrainOptions opts = {})
        : config(cfg),
          options(opts),
          model(make_model(cfg, data, opts)),
          shuffle_stream(cfg.seed, rngstream::kShuffle),
          noise(cfg.seed, rngstream::kNoise) {
        if (opts.use_sand) layer.emplace(data.n_features, cfg.k, cfg.sigma, cfg.alpha);
    }

private:
    static MlpModel make_model(const TrainConfig& cfg, const Dataset& data,
                               const TrainOptions& opts) {
        cfg.validate();
        if (data.n_samples == 0 || data.n_features == 0)
            throw ConfigError("cannot train on an empty dataset");
        MlpConfig mc;
        mc.input_dim = data.n_features;
        mc.task = data.task;
        if (data.task == TaskKind::Classification) {
            if (data.n_classes < 2)
                throw ConfigError("classification dataset needs at least 2 classes");
            mc.output_dim = data.n_classes;
        } else {
            mc.output_dim = data.target_dim;
        }
        mc.hidden_width = opts.hidden_width;
        mc.linear = opts.linear_model;
        RngStream init(cfg.seed, rngstream::kInit);
        return MlpModel(mc, init);
    }
};

namespace detail {

inline Tensor gather_rows(const Dataset& data, std::span<const std::size_t> rows) {
    std::vector<double> out(rows.size() * data.n_features);
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy_n(data.X.begin() + static_cast<std::ptrdiff_t>(rows[r] * data.n_features),
                    data.n_features, out.begin() + static_cast<std::ptrdiff_t>(r * data.n_features));
    return Tensor::from({rows.size(), data.n_features}, std::move(out));
}

inline Tensor gather_targets(const Dataset& data, std::span<const std::size_t> rows) {
    std::vector<double> out(rows.size() * data.target_dim);
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy_n(data.targets.begin() +
                        static_cast<std::ptrdiff_t>(rows[r] * data.target_dim),
                    data.target_dim, out.begin() + static_cast<std::ptrdiff_t>(r * data.target_dim));
    return Tensor::from({rows.size(), data.target_dim}, std::move(out));
}

inline std::vector<int> gather_labels(const Dataset& data, std::span<const std::size_t> rows) {
    std::vector<int> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = data.labels[rows[r]];
    return out;
}

/// Accuracy (classification) or MAE (regression) on the given rows with the
/// layer switched to `mode` for the duration of the call.
inline double evaluate_metric(TrainRun& run, const Dataset& data,
                              std::span<const std::size_t> rows, LayerMode mode) {
    Tensor x = gather_rows(data, rows);
    Tensor inputs = x;
    if (run.layer) {
        const LayerMode prev = run.layer->mode();
        if (mode == LayerMode::Finalized && prev != LayerMode::Finalized)
            throw ContractError("evaluate_metric: layer is not finalized");
        if (mode != LayerMode::Finalized) run.layer->set_mode(mode);
        inputs = run.layer->forward(x, run.noise);
        if (mode != LayerMode::Finalized) run.layer->set_mode(prev);
    }
    Tensor out = run.model.forward(inputs);
    if (data.task == TaskKind::Classification)
        return accuracy_metric(out, gather_labels(data, rows));
    Tensor target = gather_targets(data, rows);
    return mae_metric(out.values(), target.values());
}

inline void append_snapshot(TrainRun& run, std::size_t epoch_label) {
    if (!run.layer) return;
    std::vector<double> gains = run.layer->snapshot_gains();
    std::sort(gains.begin(), gains.end(), std::greater<>());
    run.trajectory.push_back({epoch_label, std::move(gains)});
}

}  // namespace detail

/// Joint training of the selection layer and the network with one shared
/// Adam optimizer; raw gains are clipped into [0, 1] after every step.
/// A gain snapshot and a noiseless validation metric are recorded at epoch 0,
/// every `trajectory_every` epochs, and at the final epoch; afterwards the
/// selection is finalized once and the test metric is computed in both
/// Eval (unmasked) and Finalized (masked) modes.
inline TrainResult train(TrainRun& run, const Dataset& data) {
    const TrainConfig& cfg = run.config;
    const DatasetSplit split = split_dataset(data.n_samples, cfg.split, cfg.seed);

    std::vector<std::pair<std::string, Tensor>> params = run.model.parameters();
    if (run.layer) params.emplace_back("gains", run.layer->raw_gains());
    AdamState adam(params);

    if (run.layer) run.layer->set_mode(LayerMode::Training);
    detail::append_snapshot(run, 0);

    std::vector<std::size_t> order = split.train;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        run.shuffle_stream.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            std::span<const std::size_t> rows(order.data() + start, count);
            Tensor x = detail::gather_rows(data, rows);
            Tensor inputs = run.layer ? run.layer->forward(x, run.noise) : x;
            Tensor out = run.model.forward(inputs);
            Tensor loss = data.task == TaskKind::Classification
                              ? cross_entropy(out, detail::gather_labels(data, rows))
                              : mse_loss(out, detail::gather_targets(data, rows));
            const double loss_value = loss.value();
            if (!std::isfinite(loss_value))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index));
            backward(loss);
            adam_step(params, adam, cfg.learning_rate);
            if (run.layer) run.layer->clip_gains();
            epoch_loss += loss_value * static_cast<double>(count);
            ++batch_index;
        }
        epoch_loss /= static_cast<double>(order.size());

        if (epoch % cfg.trajectory_every == 0 || epoch == cfg.epochs) {
            detail::append_snapshot(run, epoch);
            const double val_metric =
                detail::evaluate_metric(run, data, split.val, LayerMode::Eval);
            run.metrics.push_back({epoch, epoch_loss, val_metric});
        }
    }

    TrainResult result;
    result.config = cfg;
    result.options = run.options;
    result.resolved_hidden_width = run.model.hidden_width();
    result.metric_name = data.task == TaskKind::Classification ? "accuracy" : "mae";
    result.val_metric_final = detail::evaluate_metric(run, data, split.val, LayerMode::Eval);
    result.test_metric_unmasked =
        detail::evaluate_metric(run, data, split.test, LayerMode::Eval);

    if (run.layer) {
        result.selection = run.layer->finalize_selection();
        result.test_metric_masked =
            detail::evaluate_metric(run, data, split.test, LayerMode::Finalized);
    } else {
        // Baseline run without a selection layer: everything is kept.
        result.selection.k = data.n_features;
        result.selection.sigma = 0.0;
        result.selection.alpha = cfg.alpha;
        result.selection.gains.assign(data.n_features, 1.0);
        result.selection.selected_indices.resize(data.n_features);
        std::iota(result.selection.selected_indices.begin(),
                  result.selection.selected_indices.end(), 0);
        result.selection.polarization = 0.0;
        result.test_metric_masked = result.test_metric_unmasked;
    }
    result.trajectory = run.trajectory;
    result.metrics = run.metrics;
    return result;
}

/// The recorded gain-trajectory table: one row per recorded epoch, gains
/// sorted descending.
inline const std::vector<TrajectoryRow>& record_trajectory(const TrainRun& run) {
    return run.trajectory;
}

inline void write_trajectory_csv(const std::string& path,
                                 const std::vector<TrajectoryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    const std::size_t n = rows.empty() ? 0 : rows.front().sorted_gains.size();
    out << "epoch";
    for (std::size_t i = 1; i <= n; ++i) out << ",g" << i;
    out << "\n";
    for (const auto& row : rows) {
        out << row.epoch;
        for (double g : row.sorted_gains) out << "," << detail::format_double(g);
        out << "\n";
    }
}

inline void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << "epoch,train_loss,val_metric\n";
    for (const auto& row : rows)
        out << row.epoch << "," << detail::format_double(row.train_loss) << ","
            << detail::format_double(row.val_metric) << "\n";
}

}  // namespace sand
