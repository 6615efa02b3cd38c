#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cthunet/dataset.hpp"
#include "cthunet/losses.hpp"
#include "cthunet/model.hpp"

namespace cthunet {

enum class OptimizerKind { Adam, Sgd };
enum class SchedulerKind { ReduceOnPlateau, None };

// Which loss drives the optimization. BiH is the full composite; the other
// variants are plain sums of the named components (used by the loss
// ablation), with the alpha/beta weighting not applied.
enum class LossVariant { BiH, BceOnly, DiceBoundary, BceDice };

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double lr = 1e-3;
    SchedulerKind scheduler = SchedulerKind::ReduceOnPlateau;
    double sched_factor = 0.5;
    int sched_patience = 5;
    double min_lr = 1e-6;
    uint64_t seed = 42;
    int checkpoint_every = 10;
    bool augment_hflip = true;
    LossConfig loss;
    LossVariant variant = LossVariant::BiH;
    double threshold = 0.5; // binarization for validation Dice

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double wbce = 0.0, dice = 0.0, hinge = 0.0, boundary = 0.0;
    double val_dice = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::string to_csv() const;
    std::string to_json_string() const;
};

// Raised when the training loss goes non-finite.
struct DivergenceError : std::runtime_error {
    DivergenceError(int epoch, int batch)
        : std::runtime_error("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(batch)),
          epoch_index(epoch),
          batch_index(batch) {}
    int epoch_index;
    int batch_index;
};

// Optimizes the model in place. When out_dir is non-empty, writes
// ckpt_epoch{N}.bin at the checkpoint cadence (and for the final epoch) and
// keeps ckpt_best.bin at the best validation Dice. Signed distance maps are
// computed once per training sample before epoch 1.
TrainHistory train(AttentionUNet& model, const DatasetSplit& split, const TrainConfig& cfg,
                   const std::string& out_dir = "");

} // namespace cthunet
