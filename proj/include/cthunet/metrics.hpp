#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cthunet/image.hpp"
#include "cthunet/tensor.hpp"

namespace cthunet {

class AttentionUNet;

struct ConfusionCounts {
    uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    uint64_t total() const { return tp + fp + tn + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

ConfusionCounts confusion(const ImageU8& pred, const ImageU8& gt);

// 2tp / (2tp + fp + fn); the 0/0 case (both masks empty) is defined as 1.
double dice_coefficient(const ConfusionCounts& c);
// tp / (tp + fn), 1 when tp + fn == 0.
double sensitivity(const ConfusionCounts& c);
// tn / (tn + fp), 1 when tn + fp == 0.
double specificity(const ConfusionCounts& c);

ImageU8 binarize(const ImageF& probs, double threshold);

struct SampleMetrics {
    std::string id;
    double dice = 0.0, sensitivity = 0.0, specificity = 0.0;
    ConfusionCounts counts;
    bool degenerate = false; // both prediction and ground truth empty
};

struct AggregateMetrics {
    double dice = 0.0, sensitivity = 0.0, specificity = 0.0;
};

struct MetricsReport {
    std::vector<SampleMetrics> per_sample;
    ConfusionCounts summed;
    AggregateMetrics micro; // from summed confusion counts
    AggregateMetrics macro; // mean of per-sample metrics
    double threshold = 0.5;
};

using ForwardFn = std::function<FTensor(const FTensor&)>;

// Binarizes forward probabilities at threshold and scores each sample plus
// the micro/macro aggregates. Deterministic for a deterministic forward_fn.
MetricsReport evaluate(const ForwardFn& forward_fn, const std::vector<SamplePair>& samples,
                       double threshold, int batch_size = 8);

// Evaluation-mode convenience overload.
MetricsReport evaluate(AttentionUNet& model, const std::vector<SamplePair>& samples,
                       double threshold, int batch_size = 8);

} // namespace cthunet
