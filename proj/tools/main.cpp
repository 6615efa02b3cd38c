#include <iostream>

#include <CLI11.hpp>

#include "cthunet/commands.hpp"

namespace {

// Binds the shared option set; every subcommand accepts --config <file> with
// the same keys, and explicit flags override file values.
void add_common_options(CLI::App* cmd, cthunet::RunOptions& o) {
    cmd->set_config("--config", "", "read options from a key=value config file");
    cmd->add_option("--data", o.data, "dataset directory or synth://COUNTxSIZE");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file");
    cmd->add_option("--resize", o.resize, "square resize target for directory datasets (0 = keep)");
    cmd->add_option("--label", o.label, "infection label id in masks (0 = any nonzero)");
    cmd->add_option("--test-fraction", o.test_fraction, "fraction of scans held out for testing");
    cmd->add_option("--base-channels", o.base_channels, "first-level channel width (power of two >= 8)");
    cmd->add_option("--in-channels", o.in_channels, "input channels");
    cmd->add_option("--norm", o.norm, "normalization: batch | none");
    cmd->add_option("--upsample", o.upsample, "decoder upsampling: transposed-conv | bilinear+conv");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--batch-size", o.batch_size, "batch size");
    cmd->add_option("--optimizer", o.optimizer, "adam | sgd");
    cmd->add_option("--lr", o.lr, "initial learning rate");
    cmd->add_option("--scheduler", o.scheduler, "reduce-on-plateau | none");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--checkpoint-every", o.checkpoint_every, "checkpoint cadence in epochs");
    cmd->add_option("--hflip", o.hflip, "horizontal flip augmentation");
    cmd->add_option("--alpha", o.alpha, "weight of the wBCE+Dice pair");
    cmd->add_option("--beta", o.beta, "weight of the hinge+boundary pair");
    cmd->add_option("--dice-smooth", o.dice_smooth, "Dice smoothing constant");
    cmd->add_option("--bce-weighting", o.bce_weighting, "hed-class-balance | uniform");
    cmd->add_option("--threshold", o.threshold, "binarization threshold in (0,1)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"attention U-Net CT infection segmentation toolkit"};
    app.require_subcommand(1);

    cthunet::RunOptions train_opts, eval_opts, predict_opts, ablate_opts;
    int synth_count = 200, synth_size = 64;
    uint64_t synth_seed = 7;
    std::string synth_out, check_scope = "all", check_json;

    auto* train = app.add_subcommand("train", "train a model and write checkpoints + history");
    add_common_options(train, train_opts);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint, emit metrics table + JSON");
    add_common_options(eval, eval_opts);

    auto* predict = app.add_subcommand("predict", "write probability and binary mask PNGs");
    add_common_options(predict, predict_opts);

    auto* synth = app.add_subcommand("synth", "write a synthetic PNG dataset");
    synth->add_option("--count", synth_count, "number of samples");
    synth->add_option("--size", synth_size, "slice size in pixels (>= 16)");
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* check = app.add_subcommand("check", "run the verification oracles");
    check->add_option("scope", check_scope, "losses | metrics | gates | all");
    check->add_option("--json", check_json, "also write results as JSON");

    auto* ablate = app.add_subcommand("ablate", "train the four loss variants and tabulate metrics");
    add_common_options(ablate, ablate_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cthunet::kExitUsage;
    }

    if (*train) return cthunet::cmd_train(train_opts);
    if (*eval) return cthunet::cmd_eval(eval_opts);
    if (*predict) return cthunet::cmd_predict(predict_opts);
    if (*synth) return cthunet::cmd_synth(synth_count, synth_size, synth_seed, synth_out);
    if (*check) return cthunet::cmd_check(check_scope, check_json);
    if (*ablate) return cthunet::cmd_ablate(ablate_opts);
    return cthunet::kExitUsage;
}
