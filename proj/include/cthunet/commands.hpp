#pragma once

#include <cstdint>
#include <string>

namespace cthunet {

// Exit-code contract: 0 success, 1 usage/config error, 2 runtime abort.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAbort = 2;

// Union of model / training / loss / data options; field names mirror the
// CLI flags so a resolved snapshot can be re-fed through --config.
struct RunOptions {
    // data
    std::string data;          // directory or synth://COUNTxSIZE
    std::string out;           // output directory
    std::string checkpoint;    // for eval/predict
    int resize = 256;          // 0 keeps the native size
    int label = 0;             // infection label id; 0 = any nonzero
    double test_fraction = 0.2;

    // model
    int base_channels = 64;
    int in_channels = 1;
    std::string norm = "batch";              // batch | none
    std::string upsample = "transposed-conv"; // transposed-conv | bilinear+conv

    // training
    int epochs = 100;
    int batch_size = 32;
    std::string optimizer = "adam"; // adam | sgd
    double lr = 1e-3;
    std::string scheduler = "reduce-on-plateau"; // reduce-on-plateau | none
    uint64_t seed = 42;
    int checkpoint_every = 10;
    bool hflip = true;

    // loss
    double alpha = 0.5;
    double beta = 0.5;
    double dice_smooth = 1.0;
    std::string bce_weighting = "hed-class-balance"; // hed-class-balance | uniform

    // evaluation
    double threshold = 0.5;
};

// Resolved key=value snapshot, parseable by the CLI's --config option.
std::string options_to_config(const RunOptions& opts);

int cmd_train(const RunOptions& opts);
int cmd_eval(const RunOptions& opts);
int cmd_predict(const RunOptions& opts);
int cmd_synth(int count, int size, uint64_t seed, const std::string& outdir);
int cmd_check(const std::string& scope, const std::string& json_path = "");
int cmd_ablate(const RunOptions& opts);

} // namespace cthunet
