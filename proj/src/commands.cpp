#include "cthunet/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cthunet/checkpoint.hpp"
#include "cthunet/dataset.hpp"
#include "cthunet/metrics.hpp"
#include "cthunet/png_io.hpp"
#include "cthunet/report.hpp"
#include "cthunet/synth.hpp"
#include "cthunet/train.hpp"
#include "cthunet/verify.hpp"

namespace fs = std::filesystem;

namespace cthunet {

namespace {

struct SynthSpec {
    int count = 0, size = 0;
};

// synth://COUNTxSIZE, e.g. synth://200x64
bool parse_synth_uri(const std::string& s, SynthSpec& out) {
    const std::string prefix = "synth://";
    if (s.rfind(prefix, 0) != 0) return false;
    const std::string body = s.substr(prefix.size());
    const size_t x = body.find('x');
    if (x == std::string::npos) throw std::invalid_argument("bad synth URI, expected synth://COUNTxSIZE: " + s);
    out.count = std::stoi(body.substr(0, x));
    out.size = std::stoi(body.substr(x + 1));
    return true;
}

ModelConfig model_config_from(const RunOptions& o) {
    ModelConfig m;
    m.in_channels = o.in_channels;
    m.base_channels = o.base_channels;
    if (o.norm == "batch")
        m.norm = ModelConfig::NormMode::Batch;
    else if (o.norm == "none")
        m.norm = ModelConfig::NormMode::None;
    else
        throw std::invalid_argument("norm must be 'batch' or 'none', got '" + o.norm + "'");
    if (o.upsample == "transposed-conv")
        m.upsample = ModelConfig::Upsample::TransposedConv;
    else if (o.upsample == "bilinear+conv")
        m.upsample = ModelConfig::Upsample::BilinearConv;
    else
        throw std::invalid_argument("upsample must be 'transposed-conv' or 'bilinear+conv'");
    m.validate();
    return m;
}

LossConfig loss_config_from(const RunOptions& o) {
    LossConfig l;
    l.alpha = o.alpha;
    l.beta = o.beta;
    l.dice_smooth = o.dice_smooth;
    if (o.bce_weighting == "hed-class-balance")
        l.bce_weighting = BceWeighting::HedClassBalance;
    else if (o.bce_weighting == "uniform")
        l.bce_weighting = BceWeighting::Uniform;
    else
        throw std::invalid_argument("bce-weighting must be 'hed-class-balance' or 'uniform'");
    l.validate();
    return l;
}

TrainConfig train_config_from(const RunOptions& o) {
    TrainConfig t;
    t.epochs = o.epochs;
    t.batch_size = o.batch_size;
    if (o.optimizer == "adam")
        t.optimizer = OptimizerKind::Adam;
    else if (o.optimizer == "sgd")
        t.optimizer = OptimizerKind::Sgd;
    else
        throw std::invalid_argument("optimizer must be 'adam' or 'sgd'");
    t.lr = o.lr;
    if (o.scheduler == "reduce-on-plateau")
        t.scheduler = SchedulerKind::ReduceOnPlateau;
    else if (o.scheduler == "none")
        t.scheduler = SchedulerKind::None;
    else
        throw std::invalid_argument("scheduler must be 'reduce-on-plateau' or 'none'");
    t.seed = o.seed;
    t.checkpoint_every = o.checkpoint_every;
    t.augment_hflip = o.hflip;
    t.loss = loss_config_from(o);
    t.threshold = o.threshold;
    t.validate();
    return t;
}

std::vector<SamplePair> load_any(const RunOptions& o) {
    SynthSpec spec;
    if (parse_synth_uri(o.data, spec)) return synth_blobs(spec.count, spec.size, o.seed);
    LoadOptions lo;
    lo.infection_label = o.label;
    auto samples = load_dataset(o.data, lo);
    PreprocessOptions po;
    po.resize_to = o.resize;
    return preprocess(std::move(samples), po);
}

void check_input_size(const std::vector<SamplePair>& samples) {
    if (samples.empty()) return;
    const int r = samples[0].image.pixels.rows, c = samples[0].image.pixels.cols;
    if (r % 16 != 0 || c % 16 != 0)
        throw std::invalid_argument("input size " + std::to_string(r) + "x" + std::to_string(c) +
                                    " is not divisible by 16; pick another --resize or synth size");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

} // namespace

std::string options_to_config(const RunOptions& o) {
    std::ostringstream os;
    os << "# resolved run configuration\n";
    os << "data=" << q(o.data) << "\n";
    os << "out=" << q(o.out) << "\n";
    if (!o.checkpoint.empty()) os << "checkpoint=" << q(o.checkpoint) << "\n";
    os << "resize=" << o.resize << "\n";
    os << "label=" << o.label << "\n";
    os << "test-fraction=" << o.test_fraction << "\n";
    os << "base-channels=" << o.base_channels << "\n";
    os << "in-channels=" << o.in_channels << "\n";
    os << "norm=" << q(o.norm) << "\n";
    os << "upsample=" << q(o.upsample) << "\n";
    os << "epochs=" << o.epochs << "\n";
    os << "batch-size=" << o.batch_size << "\n";
    os << "optimizer=" << q(o.optimizer) << "\n";
    os << "lr=" << o.lr << "\n";
    os << "scheduler=" << q(o.scheduler) << "\n";
    os << "seed=" << o.seed << "\n";
    os << "checkpoint-every=" << o.checkpoint_every << "\n";
    os << "hflip=" << (o.hflip ? "true" : "false") << "\n";
    os << "alpha=" << o.alpha << "\n";
    os << "beta=" << o.beta << "\n";
    os << "dice-smooth=" << o.dice_smooth << "\n";
    os << "bce-weighting=" << q(o.bce_weighting) << "\n";
    os << "threshold=" << o.threshold << "\n";
    return os.str();
}

int cmd_train(const RunOptions& opts) {
    ModelConfig mc;
    TrainConfig tc;
    try {
        if (opts.data.empty()) throw std::invalid_argument("--data is required");
        if (opts.out.empty()) throw std::invalid_argument("--out is required");
        mc = model_config_from(opts);
        tc = train_config_from(opts);
        fs::create_directories(opts.out);
        // resolved snapshot goes down before any work starts
        write_file(opts.out + "/config.ini", options_to_config(opts));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    DatasetSplit split;
    try {
        auto samples = load_any(opts);
        check_input_size(samples);
        split = make_split(samples, opts.test_fraction, opts.seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        AttentionUNet model(mc, opts.seed);
        std::cout << "training on " << split.train.size() << " samples, validating on "
                  << split.test.size() << " (epochs=" << tc.epochs
                  << ", batch=" << tc.batch_size << ", alpha=" << tc.loss.alpha << ")\n";
        const TrainHistory history = train(model, split, tc, opts.out);
        write_file(opts.out + "/history.csv", history.to_csv());
        write_file(opts.out + "/history.json", history.to_json_string());

        if (!split.test.empty()) {
            const MetricsReport report = evaluate(model, split.test, opts.threshold);
            write_file(opts.out + "/metrics.json", metrics_report_json(report).dump(2));
            const std::string table = metrics_table({{"attention U-Net (Bi-H)", report.micro}});
            write_file(opts.out + "/metrics.txt", table);
            std::cout << table;
        }
        std::cout << "done; artifacts in " << opts.out << "\n";
        return kExitOk;
    } catch (const DivergenceError& e) {
        std::cerr << "abort: " << e.what() << "\n";
        return kExitAbort;
    } catch (const std::exception& e) {
        std::cerr << "abort: " << e.what() << "\n";
        return kExitAbort;
    }
}

int cmd_eval(const RunOptions& opts) {
    try {
        if (opts.checkpoint.empty() || !fs::exists(opts.checkpoint))
            throw std::invalid_argument("missing checkpoint: " + opts.checkpoint);
        if (opts.threshold <= 0.0 || opts.threshold >= 1.0)
            throw std::invalid_argument("threshold must be in (0,1)");
        if (opts.data.empty()) throw std::invalid_argument("--data is required");

        const LoadedCheckpoint ck = load_checkpoint(opts.checkpoint);
        AttentionUNet model = model_from_checkpoint(ck);
        auto samples = load_any(opts);
        check_input_size(samples);

        const MetricsReport report = evaluate(model, samples, opts.threshold);
        const std::string table = metrics_table({{"attention U-Net (Bi-H)", report.micro}});
        std::cout << table;
        std::cout << "macro: dice=" << report.macro.dice
                  << " sensitivity=" << report.macro.sensitivity
                  << " specificity=" << report.macro.specificity << " over "
                  << report.per_sample.size() << " samples\n";
        if (!opts.out.empty()) {
            fs::create_directories(opts.out);
            write_file(opts.out + "/metrics.json", metrics_report_json(report).dump(2));
            write_file(opts.out + "/metrics.txt", table);
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

namespace {

// Prediction inputs: a dataset root with images/, a flat directory of PNGs,
// or a synth:// URI.
std::vector<std::pair<std::string, ImageF>> collect_predict_inputs(const RunOptions& o) {
    std::vector<std::pair<std::string, ImageF>> out;
    SynthSpec spec;
    if (parse_synth_uri(o.data, spec)) {
        for (auto& sp : synth_blobs(spec.count, spec.size, o.seed))
            out.emplace_back(sp.image.source_id, std::move(sp.image.pixels));
        return out;
    }
    const fs::path root(o.data);
    if (!fs::exists(root)) throw std::invalid_argument("no such input: " + o.data);
    fs::path dir = fs::exists(root / "images") ? root / "images" : root;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::invalid_argument("no PNG inputs under " + dir.string());
    for (const auto& f : files) {
        CTSlice slice;
        slice.pixels = read_png_gray(f.string());
        slice = normalize_minmax(slice);
        if (o.resize > 0) slice.pixels = resize_bilinear(slice.pixels, o.resize, o.resize);
        out.emplace_back(f.stem().string(), std::move(slice.pixels));
    }
    return out;
}

} // namespace

int cmd_predict(const RunOptions& opts) {
    try {
        if (opts.checkpoint.empty() || !fs::exists(opts.checkpoint))
            throw std::invalid_argument("missing checkpoint: " + opts.checkpoint);
        if (opts.out.empty()) throw std::invalid_argument("--out is required");
        const LoadedCheckpoint ck = load_checkpoint(opts.checkpoint);
        AttentionUNet model = model_from_checkpoint(ck);

        const auto inputs = collect_predict_inputs(opts);
        fs::create_directories(opts.out);
        for (const auto& [name, pixels] : inputs) {
            if (pixels.rows % 16 || pixels.cols % 16)
                throw std::invalid_argument("input " + name + " has size " +
                                            std::to_string(pixels.rows) + "x" +
                                            std::to_string(pixels.cols) +
                                            ", not divisible by 16");
            FTensor x(1, pixels.rows, pixels.cols, 1);
            for (int r = 0; r < pixels.rows; ++r)
                for (int c = 0; c < pixels.cols; ++c) x(0, r, c, 0) = pixels.at(r, c);
            const FTensor prob = model.forward(x);

            ImageF prob_img(pixels.rows, pixels.cols);
            ImageU8 mask(pixels.rows, pixels.cols);
            for (int r = 0; r < pixels.rows; ++r)
                for (int c = 0; c < pixels.cols; ++c) {
                    prob_img.at(r, c) = prob(0, r, c, 0);
                    mask.at(r, c) = prob(0, r, c, 0) >= opts.threshold ? 1 : 0;
                }
            write_png_gray8(opts.out + "/" + name + "_prob.png", prob_img);
            write_png_mask(opts.out + "/" + name + "_mask.png", mask);
        }
        std::cout << "wrote " << 2 * inputs.size() << " files to " << opts.out << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_synth(int count, int size, uint64_t seed, const std::string& outdir) {
    try {
        const auto samples = synth_blobs(count, size, seed);
        write_png_dataset(samples, outdir);
        std::cout << "wrote " << samples.size() << " image/mask pairs to " << outdir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_check(const std::string& scope, const std::string& json_path) {
    try {
        const auto suites = run_checks(scope);
        bool all = true;
        for (const auto& s : suites) {
            for (const auto& r : s.results) {
                std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << s.scope << "/" << r.name << "  "
                          << r.detail << "\n";
                all = all && r.pass;
            }
        }
        if (!json_path.empty()) write_file(json_path, checks_json(suites).dump(2));
        std::cout << (all ? "all checks passed\n" : "CHECK FAILURES PRESENT\n");
        return all ? kExitOk : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_ablate(const RunOptions& opts) {
    try {
        if (opts.data.empty()) throw std::invalid_argument("--data is required");
        if (opts.out.empty()) throw std::invalid_argument("--out is required");
        const ModelConfig mc = model_config_from(opts);
        TrainConfig tc = train_config_from(opts);
        fs::create_directories(opts.out);
        write_file(opts.out + "/config.ini", options_to_config(opts));

        auto samples = load_any(opts);
        check_input_size(samples);
        const DatasetSplit split = make_split(samples, opts.test_fraction, opts.seed);

        const std::pair<std::string, LossVariant> rows[4] = {
            {"BCE", LossVariant::BceOnly},
            {"Dice+Boundary", LossVariant::DiceBoundary},
            {"BCE+Dice", LossVariant::BceDice},
            {"Bi-H", LossVariant::BiH},
        };
        std::vector<std::pair<std::string, AggregateMetrics>> table_rows;
        nlohmann::json jrows = nlohmann::json::array();
        for (const auto& [name, variant] : rows) {
            tc.variant = variant;
            AttentionUNet model(mc, opts.seed);
            const TrainHistory history = train(model, split, tc);
            const MetricsReport report = evaluate(model, split.test, opts.threshold);
            table_rows.emplace_back(name, report.micro);
            write_file(opts.out + "/history_" + name + ".csv", history.to_csv());
            jrows.push_back({{"loss", name},
                             {"dice", report.micro.dice},
                             {"sensitivity", report.micro.sensitivity},
                             {"specificity", report.micro.specificity}});
            std::cout << name << ": dice=" << report.micro.dice << "\n";
        }

        std::ostringstream os;
        os << metrics_table(table_rows, "Loss");
        os << "\nreference (published full-scale results):\n";
        std::vector<std::pair<std::string, AggregateMetrics>> ref_rows;
        for (const auto& r : kReferenceLossAblation)
            ref_rows.emplace_back(r.name, AggregateMetrics{r.dice, r.sensitivity, r.specificity});
        os << metrics_table(ref_rows, "Loss");
        const std::string table = os.str();
        std::cout << table;

        nlohmann::json jref = nlohmann::json::array();
        for (const auto& r : kReferenceLossAblation)
            jref.push_back({{"loss", r.name},
                            {"dice", r.dice},
                            {"sensitivity", r.sensitivity},
                            {"specificity", r.specificity}});
        write_file(opts.out + "/ablation.json",
                   nlohmann::json{{"rows", jrows}, {"reference", jref}}.dump(2));
        write_file(opts.out + "/ablation.txt", table);
        return kExitOk;
    } catch (const DivergenceError& e) {
        std::cerr << "abort: " << e.what() << "\n";
        return kExitAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

} // namespace cthunet
