#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cthunet/rng.hpp"
#include "cthunet/tensor.hpp"

namespace cthunet {

struct ParamRef {
    std::string name;
    std::vector<float>* value;
    std::vector<float>* grad;
};

struct BufferRef {
    std::string name;
    std::vector<float>* value;
};

// All layers follow the same protocol: forward(x, train) caches whatever the
// backward pass needs only when train is true, so evaluation-mode forward
// leaves the layer untouched and is safe for concurrent readers. backward
// accumulates parameter gradients and returns the input gradient.

// stride-1 same-padding convolution, kernel 1x1 or 3x3; weights are laid out
// [ky*kx*in_c][out_c] so im2col rows multiply straight into NHWC output.
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_c, int out_c, int ksize);

    void init_he(Rng& rng);     // std = sqrt(2 / fan_in), biases zero
    void init_xavier(Rng& rng); // std = sqrt(1 / fan_in)

    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);

    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    void zero_grad();
    int in_channels() const { return in_c_; }
    int out_channels() const { return out_c_; }

    std::vector<float> w, b, gw, gb;

private:
    int in_c_ = 0, out_c_ = 0, k_ = 0;
    FTensor x_;
};

// 2x2 stride-2 transposed convolution (non-overlapping taps).
class TransposedConv2x2 {
public:
    TransposedConv2x2() = default;
    TransposedConv2x2(int in_c, int out_c);

    void init_he(Rng& rng);

    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);

    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    void zero_grad();
    int out_channels() const { return out_c_; }

    std::vector<float> w, b, gw, gb; // w: [(di*2+dj)*in_c][out_c]

private:
    int in_c_ = 0, out_c_ = 0;
    FTensor x_;
};

// Parameter-free 2x bilinear upsampling (half-pixel centers, clamped borders).
class BilinearUp2x {
public:
    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);

private:
    int n_ = 0, h_ = 0, w_ = 0, c_ = 0;
};

class MaxPool2x2 {
public:
    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);

private:
    int n_ = 0, h_ = 0, w_ = 0, c_ = 0;
    std::vector<uint8_t> argmax_; // 0..3: dy*2+dx of the winning input pixel
};

class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);

    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);

    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out);
    void zero_grad();

    std::vector<float> gamma, beta, g_gamma, g_beta;
    std::vector<float> running_mean, running_var;
    float eps = 1e-5f;
    float momentum = 0.1f;

private:
    int c_ = 0;
    FTensor xhat_;
    std::vector<float> inv_std_;
};

// Batch normalization or a pass-through, selected at construction. The
// "none" mode exists for deterministic unit tests.
class Norm {
public:
    enum class Mode { Batch, None };

    Norm() = default;
    Norm(Mode mode, int channels) : mode_(mode) {
        if (mode == Mode::Batch) bn_ = BatchNorm2d(channels);
    }

    FTensor forward(const FTensor& x, bool train) {
        return mode_ == Mode::Batch ? bn_.forward(x, train) : x;
    }
    FTensor backward(const FTensor& gy) {
        return mode_ == Mode::Batch ? bn_.backward(gy) : gy;
    }
    void collect(const std::string& prefix, std::vector<ParamRef>& out) {
        if (mode_ == Mode::Batch) bn_.collect(prefix, out);
    }
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
        if (mode_ == Mode::Batch) bn_.collect_buffers(prefix, out);
    }
    void zero_grad() {
        if (mode_ == Mode::Batch) bn_.zero_grad();
    }

private:
    Mode mode_ = Mode::None;
    BatchNorm2d bn_;
};

class ReLU {
public:
    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);

private:
    std::vector<uint8_t> mask_;
};

class Sigmoid {
public:
    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);

private:
    FTensor y_;
};

FTensor concat_channels(const FTensor& a, const FTensor& b);
void split_channels(const FTensor& g, int c_first, FTensor& ga, FTensor& gb);

} // namespace cthunet
