#include "cthunet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cthunet {

void LossConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
        throw std::invalid_argument("loss config: alpha and beta must lie in [0,1]");
    if (std::abs(alpha + beta - 1.0) > 1e-9)
        throw std::invalid_argument("loss config: alpha + beta must equal 1");
    if (dice_smooth <= 0.0)
        throw std::invalid_argument("loss config: dice_smooth must be positive");
}

double weighted_bce(const DTensor& pred, const DTensor& target, BceWeighting mode, DTensor* grad) {
    require_same_shape(pred, target, "weighted_bce");
    const size_t n = pred.size();

    double w_pos = 1.0, w_neg = 1.0;
    if (mode == BceWeighting::HedClassBalance) {
        double n_pos = 0.0;
        for (size_t i = 0; i < n; ++i) n_pos += target[i];
        const double n_neg = double(n) - n_pos;
        if (n_pos > 0.0 && n_neg > 0.0) {
            w_pos = n_neg / double(n);
            w_neg = n_pos / double(n);
        } // all-one or all-zero targets keep uniform weights
    }

    if (grad) {
        *grad = DTensor(pred.batch(), pred.rows(), pred.cols(), pred.channels());
    }
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double raw = pred[i];
        const double p = std::clamp(raw, kBceEps, 1.0 - kBceEps);
        const double y = target[i];
        sum += -(w_pos * y * std::log(p) + w_neg * (1.0 - y) * std::log1p(-p));
        if (grad) {
            // clamped pixels are flat w.r.t. the raw input
            const bool active = raw > kBceEps && raw < 1.0 - kBceEps;
            (*grad)[i] = active ? (-w_pos * y / p + w_neg * (1.0 - y) / (1.0 - p)) / double(n) : 0.0;
        }
    }
    return sum / double(n);
}

double dice_loss(const DTensor& pred, const DTensor& target, double smooth, DTensor* grad) {
    require_same_shape(pred, target, "dice_loss");
    if (smooth <= 0.0) throw std::invalid_argument("dice_loss: smooth must be positive");

    const int batch = pred.batch();
    const size_t per = pred.size() / size_t(batch);
    if (grad) *grad = DTensor(pred.batch(), pred.rows(), pred.cols(), pred.channels());

    double sum = 0.0;
    for (int b = 0; b < batch; ++b) {
        const size_t off = size_t(b) * per;
        double inter = 0.0, psum = 0.0, ysum = 0.0;
        for (size_t i = 0; i < per; ++i) {
            inter += pred[off + i] * target[off + i];
            psum += pred[off + i];
            ysum += target[off + i];
        }
        const double num = 2.0 * inter + smooth;
        const double den = psum + ysum + smooth;
        sum += 1.0 - num / den;
        if (grad) {
            for (size_t i = 0; i < per; ++i) {
                const double dnum = 2.0 * target[off + i];
                (*grad)[off + i] = -(dnum * den - num) / (den * den) / double(batch);
            }
        }
    }
    return sum / double(batch);
}

double squared_hinge(const DTensor& pred, const DTensor& target, DTensor* grad) {
    require_same_shape(pred, target, "squared_hinge");
    const size_t n = pred.size();
    if (grad) *grad = DTensor(pred.batch(), pred.rows(), pred.cols(), pred.channels());

    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double yhat = 2.0 * pred[i] - 1.0;
        const double t = 2.0 * target[i] - 1.0;
        const double margin = 1.0 - t * yhat;
        if (margin > 0.0) {
            sum += margin * margin;
            if (grad) (*grad)[i] = -4.0 * t * margin / double(n);
        }
    }
    return sum / double(n);
}

double boundary_loss(const DTensor& pred, const DTensor& sdm, DTensor* grad) {
    require_same_shape(pred, sdm, "boundary_loss");
    const size_t n = pred.size();
    if (grad) *grad = DTensor(pred.batch(), pred.rows(), pred.cols(), pred.channels());

    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sum += pred[i] * sdm[i];
        if (grad) (*grad)[i] = sdm[i] / double(n);
    }
    return sum / double(n);
}

LossBreakdown bi_h_loss(const DTensor& pred, const DTensor& target, const DTensor& sdm,
                        const LossConfig& cfg, DTensor* grad) {
    cfg.validate();

    LossBreakdown out;
    DTensor g_wbce, g_dice, g_hinge, g_boundary;
    DTensor* gw = grad ? &g_wbce : nullptr;
    DTensor* gd = grad ? &g_dice : nullptr;
    DTensor* gh = grad ? &g_hinge : nullptr;
    DTensor* gb = grad ? &g_boundary : nullptr;

    out.wbce = weighted_bce(pred, target, cfg.bce_weighting, gw);
    out.dice = dice_loss(pred, target, cfg.dice_smooth, gd);
    out.hinge = squared_hinge(pred, target, gh);
    out.boundary = boundary_loss(pred, sdm, gb);
    out.total = cfg.alpha * (out.wbce + out.dice) + cfg.beta * (out.hinge + out.boundary);

    if (grad) {
        *grad = DTensor(pred.batch(), pred.rows(), pred.cols(), pred.channels());
        for (size_t i = 0; i < grad->size(); ++i)
            (*grad)[i] = cfg.alpha * (g_wbce[i] + g_dice[i]) + cfg.beta * (g_hinge[i] + g_boundary[i]);
    }
    return out;
}

} // namespace cthunet
