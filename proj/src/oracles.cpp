#include "cthunet/oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cthunet {

DTensor finite_diff_grad(const std::function<double(const DTensor&)>& loss_fn, const DTensor& at,
                         double step) {
    if (step <= 0.0) throw std::invalid_argument("finite_diff_grad: step must be positive");
    DTensor grad(at.batch(), at.rows(), at.cols(), at.channels());
    DTensor probe = at;
    for (size_t i = 0; i < at.size(); ++i) {
        const double keep = probe[i];
        probe[i] = keep + step;
        const double up = loss_fn(probe);
        probe[i] = keep - step;
        const double down = loss_fn(probe);
        probe[i] = keep;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw std::runtime_error("finite_diff_grad: non-finite evaluation at flat index " +
                                     std::to_string(i));
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

OracleMetrics brute_force_metrics(const ImageU8& pred, const ImageU8& gt) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("brute_force_metrics: shape mismatch");
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (int r = 0; r < pred.rows; ++r) {
        for (int c = 0; c < pred.cols; ++c) {
            const int p = pred.at(r, c), g = gt.at(r, c);
            if (p == 1 && g == 1) tp++;
            if (p == 1 && g == 0) fp++;
            if (p == 0 && g == 0) tn++;
            if (p == 0 && g == 1) fn++;
        }
    }
    OracleMetrics m;
    m.dice = (2 * tp + fp + fn) == 0 ? 1.0 : double(2 * tp) / double(2 * tp + fp + fn);
    m.sensitivity = (tp + fn) == 0 ? 1.0 : double(tp) / double(tp + fn);
    m.specificity = (tn + fp) == 0 ? 1.0 : double(tn) / double(tn + fp);
    return m;
}

ImageD brute_force_sdm(const ImageU8& mask) {
    const int rows = mask.rows, cols = mask.cols;
    bool any_fg = false, any_bg = false;
    for (uint8_t p : mask.v) (p ? any_fg : any_bg) = true;
    ImageD phi(rows, cols, 0.0);
    if (!any_fg || !any_bg) return phi;

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const uint8_t self = mask.at(r, c);
            long best = std::numeric_limits<long>::max();
            for (int rr = 0; rr < rows; ++rr)
                for (int cc = 0; cc < cols; ++cc)
                    if (mask.at(rr, cc) != self) {
                        const long d2 = long(rr - r) * (rr - r) + long(cc - c) * (cc - c);
                        if (d2 < best) best = d2;
                    }
            const double d = std::sqrt(double(best));
            phi.at(r, c) = self ? -d : d;
        }
    }
    return phi;
}

double tiny_loss_oracle(const std::string& component, const DTensor& pred, const DTensor& target,
                        const DTensor& sdm, const OracleParams& params) {
    if (pred.rows() > 8 || pred.cols() > 8)
        throw std::invalid_argument("tiny_loss_oracle: grid must be at most 8x8");

    const int nb = pred.batch();
    const size_t per = pred.size() / size_t(nb);
    const size_t n = pred.size();

    auto oracle_wbce = [&]() {
        double pos = 0.0;
        for (size_t i = 0; i < n; ++i) pos += target[i];
        double wp = 1.0, wn = 1.0;
        if (params.weighting == BceWeighting::HedClassBalance && pos > 0.0 &&
            pos < double(n)) {
            wp = (double(n) - pos) / double(n);
            wn = pos / double(n);
        }
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double p = pred[i];
            if (p < 1e-7) p = 1e-7;
            if (p > 1.0 - 1e-7) p = 1.0 - 1e-7;
            acc -= wp * target[i] * std::log(p) + wn * (1.0 - target[i]) * std::log(1.0 - p);
        }
        return acc / double(n);
    };
    auto oracle_dice = [&]() {
        double acc = 0.0;
        for (int b = 0; b < nb; ++b) {
            double inter = 0.0, ps = 0.0, ys = 0.0;
            for (size_t i = 0; i < per; ++i) {
                inter += pred[b * per + i] * target[b * per + i];
                ps += pred[b * per + i];
                ys += target[b * per + i];
            }
            acc += 1.0 - (2.0 * inter + params.smooth) / (ps + ys + params.smooth);
        }
        return acc / double(nb);
    };
    auto oracle_hinge = [&]() {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double m = 1.0 - (2.0 * target[i] - 1.0) * (2.0 * pred[i] - 1.0);
            const double clipped = m > 0.0 ? m : 0.0;
            acc += clipped * clipped;
        }
        return acc / double(n);
    };
    auto oracle_boundary = [&]() {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) acc += pred[i] * sdm[i];
        return acc / double(n);
    };

    if (component == "wbce") return oracle_wbce();
    if (component == "dice") return oracle_dice();
    if (component == "hinge") return oracle_hinge();
    if (component == "boundary") return oracle_boundary();
    if (component == "bi-h")
        return params.alpha * (oracle_wbce() + oracle_dice()) +
               params.beta * (oracle_hinge() + oracle_boundary());
    throw std::invalid_argument("tiny_loss_oracle: unknown component '" + component + "'");
}

} // namespace cthunet
