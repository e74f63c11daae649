#pragma once

#include "popgcn/dap.hpp"
#include "popgcn/model.hpp"
#include "popgcn/training.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace popgcn {

/// JSON checkpoint: layer0 plus enough metadata to rebuild the combined
/// representation and to resume training.
struct Checkpoint {
  ModelConfig model;
  EmbeddingState state;
  std::optional<TrainConfig> train_config;
  TrainProgress progress;
  /// Present when `state` holds DAP-revised layers.
  std::optional<DapConfig> dap;
};

std::string checkpoint_json(const Checkpoint& checkpoint, bool include_layers = false);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint, bool include_layers = false);

/// Loads layer0 and metadata; `state` is not forwarded.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace popgcn
