#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cthunet/losses.hpp"
#include "cthunet/model.hpp"
#include "cthunet/optim.hpp"

namespace cthunet {

struct CheckpointMeta {
    ModelConfig model;
    LossConfig loss;
    int epoch = 0;
    double val_dice = 0.0;
    std::string optimizer; // empty when no optimizer state is stored
};

// Single-file binary checkpoint: magic + version, JSON metadata, raw float
// tensors (parameters and normalization buffers), optional optimizer state.
// Round-trips are bit-identical.
void save_checkpoint(const std::string& path, AttentionUNet& model, const CheckpointMeta& meta,
                     const Optimizer* opt = nullptr);

struct LoadedCheckpoint {
    CheckpointMeta meta;
    std::vector<std::pair<std::string, std::vector<float>>> tensors;
    std::vector<std::vector<float>> opt_state;
    uint64_t opt_step = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Copies tensors into an existing model; the model's config must match the
// checkpoint's embedded config.
void restore_model(const LoadedCheckpoint& ck, AttentionUNet& model);

// Builds a model from the embedded config and restores it.
AttentionUNet model_from_checkpoint(const LoadedCheckpoint& ck);

} // namespace cthunet
