#pragma once

#include <functional>
#include <string>

#include "cthunet/image.hpp"
#include "cthunet/losses.hpp"
#include "cthunet/tensor.hpp"

namespace cthunet {

// Result of one analytic-vs-finite-difference comparison.
struct GradCheckReport {
    std::string component;
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;
    int rows = 0, cols = 0;
    double step = 0.0;
};

// Central differences (f(p+h e_i) - f(p-h e_i)) / 2h per pixel, double
// precision. Errors name the offending pixel on a non-finite evaluation.
DTensor finite_diff_grad(const std::function<double(const DTensor&)>& loss_fn, const DTensor& at,
                         double step = 1e-5);

struct OracleMetrics {
    double dice = 0.0, sensitivity = 0.0, specificity = 0.0;
};

// Explicit per-pixel loops, no shared code with the metrics module; same
// degenerate 0/0 -> 1 conventions.
OracleMetrics brute_force_metrics(const ImageU8& pred, const ImageU8& gt);

// Double-loop nearest-opposite-pixel signed distances (negative inside).
ImageD brute_force_sdm(const ImageU8& mask);

struct OracleParams {
    double smooth = 1.0;
    BceWeighting weighting = BceWeighting::HedClassBalance;
    double alpha = 0.5;
    double beta = 0.5;
};

// Scalar-arithmetic evaluation of one loss component's closed form on a tiny
// grid, independent of the loss module. Components: "wbce", "dice", "hinge",
// "boundary", "bi-h". Grids larger than 8x8 per sample are rejected.
double tiny_loss_oracle(const std::string& component, const DTensor& pred, const DTensor& target,
                        const DTensor& sdm, const OracleParams& params = {});

} // namespace cthunet
