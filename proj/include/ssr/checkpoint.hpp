#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "json.hpp"
#include "ssr/encoder.hpp"
#include "ssr/model.hpp"

namespace ssr {

/// A restorable model: configuration, feature schema, static view indices,
/// every parameter value and (optionally) the fitted feature encoder.
struct Checkpoint {
    std::unique_ptr<Model> model;
    std::optional<FeatureEncoder> encoder;
};

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json checkpoint_to_json(const Model& model, const FeatureEncoder* encoder = nullptr);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Model& model, const FeatureEncoder* encoder, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ssr
