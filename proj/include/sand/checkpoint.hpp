#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sand/layer.hpp"
#include "sand/model.hpp"

namespace sand {

inline constexpr const char* kCheckpointFormat = "sand-ckpt-v1";

/// Self-describing JSON checkpoint: named parameter arrays with shape
/// headers, plus the selection-layer state when one is attached.
inline nlohmann::json save_checkpoint(MlpModel& model, const SandLayer* layer) {
    nlohmann::json j;
    j["format"] = kCheckpointFormat;
    j["task"] = task_name(model.config().task);
    j["input_dim"] = model.config().input_dim;
    j["output_dim"] = model.config().output_dim;
    j["linear"] = model.config().linear;
    j["hidden_width"] = model.hidden_width();
    nlohmann::json params = nlohmann::json::object();
    for (auto& [name, p] : model.parameters()) {
        params[name] = {{"shape", p.shape()},
                        {"values", std::vector<double>(p.values().begin(), p.values().end())}};
    }
    j["params"] = params;
    if (layer) {
        nlohmann::json s;
        s["k"] = layer->k();
        s["sigma"] = layer->sigma();
        s["alpha"] = layer->alpha();
        const auto g = layer->raw_gains().values();
        s["raw_gains"] = std::vector<double>(g.begin(), g.end());
        if (layer->mode() == LayerMode::Finalized) {
            std::vector<int> mask;
            for (auto m : layer->mask()) mask.push_back(m ? 1 : 0);
            s["mask"] = mask;
        }
        j["sand"] = s;
    }
    return j;
}

/// Restores parameter values (and layer gains/mask) into an existing model of
/// matching architecture.
inline void load_checkpoint(const nlohmann::json& j, MlpModel& model, SandLayer* layer) {
    if (j.value("format", "") != kCheckpointFormat)
        throw ConfigError("checkpoint format tag mismatch; expected " +
                          std::string(kCheckpointFormat));
    for (auto& [name, p] : model.parameters()) {
        if (!j.at("params").contains(name))
            throw ConfigError("checkpoint is missing parameter '" + name + "'");
        const auto& entry = j["params"][name];
        const auto shape = entry.at("shape").get<Shape>();
        if (shape != p.shape())
            throw DimensionError("checkpoint parameter '" + name + "' has shape " +
                                 detail::shape_str(shape) + ", model expects " +
                                 detail::shape_str(p.shape()));
        const auto values = entry.at("values").get<std::vector<double>>();
        std::copy(values.begin(), values.end(), p.values().begin());
    }
    if (layer && j.contains("sand")) {
        const auto& s = j["sand"];
        const auto gains = s.at("raw_gains").get<std::vector<double>>();
        if (gains.size() != layer->raw_gains().numel())
            throw DimensionError("checkpoint gain vector does not match layer size");
        std::copy(gains.begin(), gains.end(), layer->raw_gains().values().begin());
        if (s.contains("mask")) {
            const auto mask = s.at("mask").get<std::vector<int>>();
            std::vector<std::uint8_t> m(mask.size());
            for (std::size_t i = 0; i < mask.size(); ++i) m[i] = mask[i] ? 1 : 0;
            layer->restore_mask(std::move(m));
        }
    }
}

}  // namespace sand
