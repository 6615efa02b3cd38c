#include "cthunet/metrics.hpp"

#include <stdexcept>

#include "cthunet/model.hpp"

namespace cthunet {

ConfusionCounts confusion(const ImageU8& pred, const ImageU8& gt) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("confusion: shape mismatch");
    ConfusionCounts c;
    for (size_t i = 0; i < pred.size(); ++i) {
        const uint8_t p = pred.v[i], g = gt.v[i];
        if (p > 1 || g > 1) throw std::invalid_argument("confusion: masks must be binary");
        if (p && g)
            ++c.tp;
        else if (p && !g)
            ++c.fp;
        else if (!p && g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double dice_coefficient(const ConfusionCounts& c) {
    const uint64_t den = 2 * c.tp + c.fp + c.fn;
    return den == 0 ? 1.0 : double(2 * c.tp) / double(den);
}

double sensitivity(const ConfusionCounts& c) {
    const uint64_t den = c.tp + c.fn;
    return den == 0 ? 1.0 : double(c.tp) / double(den);
}

double specificity(const ConfusionCounts& c) {
    const uint64_t den = c.tn + c.fp;
    return den == 0 ? 1.0 : double(c.tn) / double(den);
}

ImageU8 binarize(const ImageF& probs, double threshold) {
    ImageU8 out(probs.rows, probs.cols);
    for (size_t i = 0; i < probs.size(); ++i) out.v[i] = probs.v[i] >= threshold ? 1 : 0;
    return out;
}

MetricsReport evaluate(const ForwardFn& forward_fn, const std::vector<SamplePair>& samples,
                       double threshold, int batch_size) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty sample list");
    if (threshold <= 0.0 || threshold >= 1.0)
        throw std::invalid_argument("evaluate: threshold must be in (0,1)");
    if (batch_size < 1) batch_size = 1;

    MetricsReport report;
    report.threshold = threshold;

    const int rows = samples[0].image.pixels.rows;
    const int cols = samples[0].image.pixels.cols;
    for (size_t start = 0; start < samples.size(); start += size_t(batch_size)) {
        const int nb = int(std::min(samples.size() - start, size_t(batch_size)));
        FTensor x(nb, rows, cols, 1);
        for (int b = 0; b < nb; ++b) {
            const auto& img = samples[start + b].image.pixels;
            if (img.rows != rows || img.cols != cols)
                throw std::invalid_argument("evaluate: samples have inconsistent shapes");
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) x(b, r, c, 0) = img.at(r, c);
        }
        const FTensor probs = forward_fn(x);
        for (int b = 0; b < nb; ++b) {
            ImageF prob_img(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) prob_img.at(r, c) = probs(b, r, c, 0);
            const ImageU8 pred = binarize(prob_img, threshold);

            SampleMetrics sm;
            sm.id = samples[start + b].image.source_id;
            sm.counts = confusion(pred, samples[start + b].mask.pixels);
            sm.dice = dice_coefficient(sm.counts);
            sm.sensitivity = sensitivity(sm.counts);
            sm.specificity = specificity(sm.counts);
            sm.degenerate = sm.counts.tp == 0 && sm.counts.fp == 0 && sm.counts.fn == 0;
            report.summed += sm.counts;
            report.per_sample.push_back(std::move(sm));
        }
    }

    report.micro = {dice_coefficient(report.summed), sensitivity(report.summed),
                    specificity(report.summed)};
    double d = 0, s = 0, p = 0;
    for (const auto& sm : report.per_sample) {
        d += sm.dice;
        s += sm.sensitivity;
        p += sm.specificity;
    }
    const double n = double(report.per_sample.size());
    report.macro = {d / n, s / n, p / n};
    return report;
}

MetricsReport evaluate(AttentionUNet& model, const std::vector<SamplePair>& samples,
                       double threshold, int batch_size) {
    const bool was_training = model.training();
    model.set_training(false);
    auto report = evaluate(ForwardFn([&model](const FTensor& x) { return model.forward(x); }),
                           samples, threshold, batch_size);
    model.set_training(was_training);
    return report;
}

} // namespace cthunet
