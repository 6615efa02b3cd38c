#pragma once

#include "cthunet/tensor.hpp"

namespace cthunet {

enum class BceWeighting { HedClassBalance, Uniform };

struct LossConfig {
    double alpha = 0.5;
    double beta = 0.5;
    double dice_smooth = 1.0;
    BceWeighting bce_weighting = BceWeighting::HedClassBalance;

    void validate() const; // alpha, beta in [0,1] and alpha + beta == 1 (1e-9)
};

// Component values before the alpha/beta weighting; total is the weighted sum.
struct LossBreakdown {
    double wbce = 0.0;
    double dice = 0.0;
    double hinge = 0.0;
    double boundary = 0.0;
    double total = 0.0;
};

// Probabilities are clamped to [eps, 1-eps] inside weighted_bce only.
constexpr double kBceEps = 1e-7;

// Class-balanced cross entropy: -mean[w+ y log p + w- (1-y) log(1-p)] with
// w+ = N-/N and w- = N+/N over the batch. Single-class targets fall back to
// uniform weights. If grad is non-null it receives d(loss)/d(pred).
double weighted_bce(const DTensor& pred, const DTensor& target, BceWeighting mode,
                    DTensor* grad = nullptr);

// 1 - (2*sum(p*y)+s) / (sum(p)+sum(y)+s), per sample, then batch mean.
double dice_loss(const DTensor& pred, const DTensor& target, double smooth,
                 DTensor* grad = nullptr);

// mean(max(0, 1 - t*yhat)^2) with yhat = 2p-1 and t = 2y-1.
double squared_hinge(const DTensor& pred, const DTensor& target, DTensor* grad = nullptr);

// mean(p * phi); negative where probability mass sits inside the ground
// truth, so the value itself may be negative.
double boundary_loss(const DTensor& pred, const DTensor& sdm, DTensor* grad = nullptr);

// total = alpha*(wbce + dice) + beta*(hinge + boundary)
LossBreakdown bi_h_loss(const DTensor& pred, const DTensor& target, const DTensor& sdm,
                        const LossConfig& cfg, DTensor* grad = nullptr);

} // namespace cthunet
