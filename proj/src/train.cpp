#include "cthunet/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "cthunet/checkpoint.hpp"
#include "cthunet/distance.hpp"
#include "cthunet/metrics.hpp"
#include "cthunet/optim.hpp"
#include "cthunet/rng.hpp"

namespace cthunet {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("train config: lr must be positive");
    if (checkpoint_every < 1)
        throw std::invalid_argument("train config: checkpoint_every must be >= 1");
    loss.validate();
}

std::string TrainHistory::to_csv() const {
    std::ostringstream os;
    os << "epoch,loss,wbce,dice,hinge,boundary,val_dice,lr,seconds\n";
    for (const auto& e : epochs) {
        os << e.epoch << ',' << e.loss << ',' << e.wbce << ',' << e.dice << ',' << e.hinge << ','
           << e.boundary << ',' << e.val_dice << ',' << e.lr << ',' << e.seconds << '\n';
    }
    return os.str();
}

std::string TrainHistory::to_json_string() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : epochs) {
        arr.push_back({{"epoch", e.epoch},
                       {"loss", e.loss},
                       {"wbce", e.wbce},
                       {"dice", e.dice},
                       {"hinge", e.hinge},
                       {"boundary", e.boundary},
                       {"val_dice", e.val_dice},
                       {"lr", e.lr},
                       {"seconds", e.seconds}});
    }
    return arr.dump(2);
}

namespace {

LossBreakdown variant_loss(LossVariant variant, const DTensor& pred, const DTensor& target,
                           const DTensor& sdm, const LossConfig& cfg, DTensor* grad) {
    if (variant == LossVariant::BiH) return bi_h_loss(pred, target, sdm, cfg, grad);

    LossBreakdown out;
    DTensor ga, gb;
    switch (variant) {
        case LossVariant::BceOnly:
            out.wbce = weighted_bce(pred, target, cfg.bce_weighting, grad);
            out.total = out.wbce;
            return out;
        case LossVariant::DiceBoundary:
            out.dice = dice_loss(pred, target, cfg.dice_smooth, grad ? &ga : nullptr);
            out.boundary = boundary_loss(pred, sdm, grad ? &gb : nullptr);
            out.total = out.dice + out.boundary;
            break;
        case LossVariant::BceDice:
            out.wbce = weighted_bce(pred, target, cfg.bce_weighting, grad ? &ga : nullptr);
            out.dice = dice_loss(pred, target, cfg.dice_smooth, grad ? &gb : nullptr);
            out.total = out.wbce + out.dice;
            break;
        default:
            break;
    }
    if (grad) {
        *grad = DTensor(pred.batch(), pred.rows(), pred.cols(), pred.channels());
        for (size_t i = 0; i < grad->size(); ++i) (*grad)[i] = ga[i] + gb[i];
    }
    return out;
}

} // namespace

TrainHistory train(AttentionUNet& model, const DatasetSplit& split, const TrainConfig& cfg,
                   const std::string& out_dir) {
    cfg.validate();
    if (split.train.empty()) throw std::invalid_argument("train: empty training set");

    const int rows = split.train[0].image.pixels.rows;
    const int cols = split.train[0].image.pixels.cols;
    for (const auto& sp : split.train)
        if (sp.image.pixels.rows != rows || sp.image.pixels.cols != cols)
            throw std::invalid_argument("train: training samples have inconsistent shapes");

    // Distance maps once per sample, before epoch 1.
    std::vector<SignedDistanceMap> sdms(split.train.size());
    for (size_t i = 0; i < split.train.size(); ++i)
        sdms[i] = split.train[i].sdm ? *split.train[i].sdm
                                     : signed_distance_map(split.train[i].mask);

    auto params = model.params();
    std::unique_ptr<Optimizer> opt;
    if (cfg.optimizer == OptimizerKind::Adam)
        opt = std::make_unique<Adam>(params, cfg.lr);
    else
        opt = std::make_unique<Sgd>(params, cfg.lr);
    ReduceOnPlateau plateau(cfg.sched_factor, cfg.sched_patience, cfg.min_lr);

    const size_t n_train = split.train.size();
    const int steps_per_epoch = int((n_train + cfg.batch_size - 1) / size_t(cfg.batch_size));

    TrainHistory history;
    double best_val = -1.0;
    std::vector<size_t> order(n_train);
    for (size_t i = 0; i < n_train; ++i) order[i] = i;

    namespace fs = std::filesystem;
    if (!out_dir.empty()) fs::create_directories(out_dir);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng rng(Rng::mix(cfg.seed, uint64_t(epoch)));
        rng.shuffle(order);

        model.set_training(true);
        double sum_loss = 0, sum_wbce = 0, sum_dice = 0, sum_hinge = 0, sum_boundary = 0;
        size_t seen = 0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            const size_t start = size_t(step) * cfg.batch_size;
            const int nb = int(std::min(n_train - start, size_t(cfg.batch_size)));

            FTensor x(nb, rows, cols, 1);
            DTensor y(nb, rows, cols, 1), phi(nb, rows, cols, 1);
            for (int b = 0; b < nb; ++b) {
                const auto& sp = split.train[order[start + b]];
                const auto& sdm = sdms[order[start + b]];
                const bool flip = cfg.augment_hflip && rng.coin();
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c) {
                        const int sc = flip ? cols - 1 - c : c;
                        x(b, r, c, 0) = sp.image.pixels.at(r, sc);
                        y(b, r, c, 0) = sp.mask.pixels.at(r, sc);
                        phi(b, r, c, 0) = sdm.phi.at(r, sc);
                    }
            }

            const FTensor probs = model.forward(x);
            const DTensor pred = probs.cast<double>();
            DTensor grad;
            const LossBreakdown lb = variant_loss(cfg.variant, pred, y, phi, cfg.loss, &grad);
            if (!std::isfinite(lb.total)) throw DivergenceError(epoch, step);

            model.zero_grad();
            model.backward(grad.cast<float>());
            opt->step();

            sum_loss += lb.total * nb;
            sum_wbce += lb.wbce * nb;
            sum_dice += lb.dice * nb;
            sum_hinge += lb.hinge * nb;
            sum_boundary += lb.boundary * nb;
            seen += size_t(nb);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = sum_loss / double(seen);
        rec.wbce = sum_wbce / double(seen);
        rec.dice = sum_dice / double(seen);
        rec.hinge = sum_hinge / double(seen);
        rec.boundary = sum_boundary / double(seen);

        if (!split.test.empty()) {
            rec.val_dice = evaluate(model, split.test, cfg.threshold).micro.dice;
        } else {
            rec.val_dice = std::numeric_limits<double>::quiet_NaN();
        }
        if (cfg.scheduler == SchedulerKind::ReduceOnPlateau && !split.test.empty())
            opt->set_lr(plateau.step(rec.val_dice, opt->lr()));
        rec.lr = opt->lr();
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back(rec);

        if (!out_dir.empty()) {
            CheckpointMeta meta{model.config(), cfg.loss, epoch, rec.val_dice, {}};
            if (epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs)
                save_checkpoint(out_dir + "/ckpt_epoch" + std::to_string(epoch) + ".bin", model,
                                meta, opt.get());
            if (!split.test.empty() && rec.val_dice > best_val) {
                best_val = rec.val_dice;
                save_checkpoint(out_dir + "/ckpt_best.bin", model, meta, opt.get());
            }
        }
    }
    model.set_training(false);
    return history;
}

} // namespace cthunet
