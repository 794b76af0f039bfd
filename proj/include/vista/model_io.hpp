#pragma once

// JSON model files.

#include "vista/core_types.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace vista {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
    FittedMixture model;
    /// Hash of the configuration that produced the model, when recorded.
    std::optional<std::string> config_hash;
};

/// Stable text: fixed key order, shortest round-trip numbers, matrices as
/// row-major nested arrays, emotion order recorded for 7-dimensional models.
std::string model_to_json(const FittedMixture& model, const std::optional<std::string>& config_hash = std::nullopt);

/// Throws DataError for malformed documents, DimensionError for inconsistent shapes.
ModelFile model_from_json(const std::string& text);

void write_model(const std::filesystem::path& path, const FittedMixture& model,
                 const std::optional<std::string>& config_hash = std::nullopt);
ModelFile read_model(const std::filesystem::path& path);

}  // namespace vista
