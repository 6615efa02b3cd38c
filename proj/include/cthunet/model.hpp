#pragma once

#include <array>
#include <utility>

#include "cthunet/layers.hpp"

namespace cthunet {

struct ModelConfig {
    int in_channels = 1;
    int base_channels = 64; // power of two, >= 8
    int depth = 4;          // fixed: four encoder/decoder levels
    enum class NormMode { Batch, None } norm = NormMode::Batch;
    enum class Upsample { TransposedConv, BilinearConv } upsample = Upsample::TransposedConv;

    void validate() const;
    Norm::Mode norm_mode() const {
        return norm == NormMode::Batch ? Norm::Mode::Batch : Norm::Mode::None;
    }
};

// conv3x3 -> norm -> relu, twice.
class DoubleConv {
public:
    DoubleConv() = default;
    DoubleConv(int in_c, int out_c, Norm::Mode norm);
    void init(Rng& rng);
    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out);
    void zero_grad();
    int out_channels() const { return c2_.out_channels(); }

private:
    Conv2d c1_, c2_;
    Norm n1_, n2_;
    ReLU r1_, r2_;
};

// Additive attention over one skip connection. Both inputs go through a 1x1
// projection with normalization, are joined pixelwise, then ReLU, a 1x1
// projection to one channel, normalization and a sigmoid produce the
// coefficient map that rescales the original skip features.
class AttentionGate {
public:
    AttentionGate() = default;
    AttentionGate(int skip_c, int gate_c, Norm::Mode norm);
    void init(Rng& rng);

    // Returns skip * a with a broadcast over channels.
    FTensor forward(const FTensor& skip, const FTensor& gate, bool train);
    // Returns (d_skip, d_gate).
    std::pair<FTensor, FTensor> backward(const FTensor& gy);

    // Coefficient map (batch, h, w, 1), every element in (0,1). Stateless.
    FTensor coefficients(const FTensor& skip, const FTensor& gate);

    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out);
    void zero_grad();
    int inter_channels() const { return skip_proj.out_channels(); }

    Conv2d skip_proj, gate_proj, attn_proj;
    Norm norm_skip, norm_gate, norm_attn;

private:
    FTensor run(const FTensor& skip, const FTensor& gate, bool train, FTensor* coeff_out);

    ReLU relu_;
    Sigmoid sig_;
    FTensor skip_, a_;
};

// Up-convolution: either a 2x2 transposed convolution or bilinear 2x
// upsampling followed by a 3x3 convolution.
class Upsampler {
public:
    Upsampler() = default;
    Upsampler(ModelConfig::Upsample mode, int in_c, int out_c);
    void init(Rng& rng);
    FTensor forward(const FTensor& x, bool train);
    FTensor backward(const FTensor& gy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    void zero_grad();

private:
    ModelConfig::Upsample mode_ = ModelConfig::Upsample::TransposedConv;
    TransposedConv2x2 tconv_;
    BilinearUp2x bil_;
    Conv2d conv_;
};

// U-shaped encoder-decoder with an attention gate on each of the four skip
// connections and a sigmoid head emitting per-pixel probabilities.
class AttentionUNet {
public:
    explicit AttentionUNet(const ModelConfig& cfg, uint64_t init_seed = 0x5eedULL);

    // Input (batch, h, w, in_channels), h and w divisible by 16; output has
    // one channel of probabilities in (0,1).
    FTensor forward(const FTensor& x);
    // Gradient w.r.t. the forward output; accumulates parameter gradients.
    void backward(const FTensor& gprob);

    void set_training(bool t) { training_ = t; }
    bool training() const { return training_; }
    void zero_grad();

    std::vector<ParamRef> params();
    std::vector<BufferRef> buffers();
    const ModelConfig& config() const { return cfg_; }

    int num_attention_gates() const { return int(gates_.size()); }
    AttentionGate& gate(int level) { return gates_.at(level); } // 0 = full resolution

private:
    ModelConfig cfg_;
    bool training_ = false;

    std::array<DoubleConv, 4> enc_;
    std::array<MaxPool2x2, 4> pool_;
    DoubleConv bottleneck_;
    std::array<Upsampler, 4> up_;
    std::array<AttentionGate, 4> gates_;
    std::array<DoubleConv, 4> dec_;
    Conv2d head_;
    Sigmoid out_;
};

} // namespace cthunet
