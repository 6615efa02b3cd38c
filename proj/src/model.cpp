#include "cthunet/model.hpp"

#include <stdexcept>

namespace cthunet {

void ModelConfig::validate() const {
    if (in_channels < 1) throw std::invalid_argument("model config: in_channels must be >= 1");
    if (base_channels < 8 || (base_channels & (base_channels - 1)) != 0)
        throw std::invalid_argument("model config: base_channels must be a power of two >= 8");
    if (depth != 4) throw std::invalid_argument("model config: depth is fixed at 4");
}

// ---------------------------------------------------------------------------
// DoubleConv

DoubleConv::DoubleConv(int in_c, int out_c, Norm::Mode norm)
    : c1_(in_c, out_c, 3), c2_(out_c, out_c, 3), n1_(norm, out_c), n2_(norm, out_c) {}

void DoubleConv::init(Rng& rng) {
    c1_.init_he(rng);
    c2_.init_he(rng);
}

FTensor DoubleConv::forward(const FTensor& x, bool train) {
    FTensor t = r1_.forward(n1_.forward(c1_.forward(x, train), train), train);
    return r2_.forward(n2_.forward(c2_.forward(t, train), train), train);
}

FTensor DoubleConv::backward(const FTensor& gy) {
    FTensor g = c2_.backward(n2_.backward(r2_.backward(gy)));
    return c1_.backward(n1_.backward(r1_.backward(g)));
}

void DoubleConv::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    c1_.collect(prefix + ".conv1", out);
    n1_.collect(prefix + ".norm1", out);
    c2_.collect(prefix + ".conv2", out);
    n2_.collect(prefix + ".norm2", out);
}

void DoubleConv::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
    n1_.collect_buffers(prefix + ".norm1", out);
    n2_.collect_buffers(prefix + ".norm2", out);
}

void DoubleConv::zero_grad() {
    c1_.zero_grad();
    c2_.zero_grad();
    n1_.zero_grad();
    n2_.zero_grad();
}

// ---------------------------------------------------------------------------
// AttentionGate

AttentionGate::AttentionGate(int skip_c, int gate_c, Norm::Mode norm) {
    const int inter = std::max(1, skip_c / 2);
    skip_proj = Conv2d(skip_c, inter, 1);
    gate_proj = Conv2d(gate_c, inter, 1);
    attn_proj = Conv2d(inter, 1, 1);
    norm_skip = Norm(norm, inter);
    norm_gate = Norm(norm, inter);
    norm_attn = Norm(norm, 1);
}

void AttentionGate::init(Rng& rng) {
    skip_proj.init_he(rng);
    gate_proj.init_he(rng);
    attn_proj.init_xavier(rng);
}

FTensor AttentionGate::run(const FTensor& skip, const FTensor& gate, bool train,
                           FTensor* coeff_out) {
    if (skip.batch() != gate.batch() || skip.rows() != gate.rows() || skip.cols() != gate.cols())
        throw std::invalid_argument("attention_gate: spatial mismatch between skip " +
                                    skip.shape_str() + " and gate " + gate.shape_str());

    FTensor s = norm_skip.forward(skip_proj.forward(skip, train), train);
    const FTensor g = norm_gate.forward(gate_proj.forward(gate, train), train);
    require_same_shape(s, g, "attention_gate");
    for (size_t i = 0; i < s.size(); ++i) s[i] += g[i];

    const FTensor u = relu_.forward(s, train);
    FTensor a = sig_.forward(norm_attn.forward(attn_proj.forward(u, train), train), train);
    if (coeff_out) *coeff_out = a;

    FTensor y(skip.batch(), skip.rows(), skip.cols(), skip.channels());
    const int c = skip.channels();
    for (size_t p = 0; p < a.size(); ++p) {
        const float coeff = a[p];
        const float* src = skip.data() + p * c;
        float* dst = y.data() + p * c;
        for (int ch = 0; ch < c; ++ch) dst[ch] = src[ch] * coeff;
    }
    if (train) {
        skip_ = skip;
        a_ = std::move(a);
    }
    return y;
}

FTensor AttentionGate::forward(const FTensor& skip, const FTensor& gate, bool train) {
    return run(skip, gate, train, nullptr);
}

FTensor AttentionGate::coefficients(const FTensor& skip, const FTensor& gate) {
    FTensor a;
    run(skip, gate, false, &a);
    return a;
}

std::pair<FTensor, FTensor> AttentionGate::backward(const FTensor& gy) {
    if (skip_.empty()) throw std::logic_error("AttentionGate::backward without cached forward");
    const int c = skip_.channels();

    // y = skip * a: the direct skip term and the reduction onto a.
    FTensor d_skip(skip_.batch(), skip_.rows(), skip_.cols(), c);
    FTensor da(a_.batch(), a_.rows(), a_.cols(), 1);
    for (size_t p = 0; p < a_.size(); ++p) {
        const float coeff = a_[p];
        const float* g = gy.data() + p * c;
        const float* s = skip_.data() + p * c;
        float* ds = d_skip.data() + p * c;
        double acc = 0.0;
        for (int ch = 0; ch < c; ++ch) {
            ds[ch] = g[ch] * coeff;
            acc += double(g[ch]) * s[ch];
        }
        da[p] = float(acc);
    }

    FTensor g = attn_proj.backward(norm_attn.backward(sig_.backward(da)));
    g = relu_.backward(g);
    // the additive join sends the same gradient down both projections
    const FTensor d_skip_proj = skip_proj.backward(norm_skip.backward(g));
    const FTensor d_gate = gate_proj.backward(norm_gate.backward(g));
    for (size_t i = 0; i < d_skip.size(); ++i) d_skip[i] += d_skip_proj[i];
    return {std::move(d_skip), d_gate};
}

void AttentionGate::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    skip_proj.collect(prefix + ".skip_proj", out);
    norm_skip.collect(prefix + ".norm_skip", out);
    gate_proj.collect(prefix + ".gate_proj", out);
    norm_gate.collect(prefix + ".norm_gate", out);
    attn_proj.collect(prefix + ".attn_proj", out);
    norm_attn.collect(prefix + ".norm_attn", out);
}

void AttentionGate::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
    norm_skip.collect_buffers(prefix + ".norm_skip", out);
    norm_gate.collect_buffers(prefix + ".norm_gate", out);
    norm_attn.collect_buffers(prefix + ".norm_attn", out);
}

void AttentionGate::zero_grad() {
    skip_proj.zero_grad();
    gate_proj.zero_grad();
    attn_proj.zero_grad();
    norm_skip.zero_grad();
    norm_gate.zero_grad();
    norm_attn.zero_grad();
}

// ---------------------------------------------------------------------------
// Upsampler

Upsampler::Upsampler(ModelConfig::Upsample mode, int in_c, int out_c) : mode_(mode) {
    if (mode_ == ModelConfig::Upsample::TransposedConv)
        tconv_ = TransposedConv2x2(in_c, out_c);
    else
        conv_ = Conv2d(in_c, out_c, 3);
}

void Upsampler::init(Rng& rng) {
    if (mode_ == ModelConfig::Upsample::TransposedConv)
        tconv_.init_he(rng);
    else
        conv_.init_he(rng);
}

FTensor Upsampler::forward(const FTensor& x, bool train) {
    if (mode_ == ModelConfig::Upsample::TransposedConv) return tconv_.forward(x, train);
    return conv_.forward(bil_.forward(x, train), train);
}

FTensor Upsampler::backward(const FTensor& gy) {
    if (mode_ == ModelConfig::Upsample::TransposedConv) return tconv_.backward(gy);
    return bil_.backward(conv_.backward(gy));
}

void Upsampler::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    if (mode_ == ModelConfig::Upsample::TransposedConv)
        tconv_.collect(prefix, out);
    else
        conv_.collect(prefix, out);
}

void Upsampler::zero_grad() {
    if (mode_ == ModelConfig::Upsample::TransposedConv)
        tconv_.zero_grad();
    else
        conv_.zero_grad();
}

// ---------------------------------------------------------------------------
// AttentionUNet

AttentionUNet::AttentionUNet(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    const int b = cfg_.base_channels;
    const Norm::Mode nm = cfg_.norm_mode();

    int in_c = cfg_.in_channels;
    for (int l = 0; l < 4; ++l) {
        enc_[l] = DoubleConv(in_c, b << l, nm);
        in_c = b << l;
    }
    bottleneck_ = DoubleConv(b << 3, b << 4, nm);
    for (int l = 0; l < 4; ++l) {
        const int out_c = b << l;
        up_[l] = Upsampler(cfg_.upsample, out_c * 2, out_c);
        gates_[l] = AttentionGate(out_c, out_c, nm);
        dec_[l] = DoubleConv(out_c * 2, out_c, nm);
    }
    head_ = Conv2d(b, 1, 1);

    Rng rng(init_seed);
    for (auto& e : enc_) e.init(rng);
    bottleneck_.init(rng);
    for (int l = 3; l >= 0; --l) {
        up_[l].init(rng);
        gates_[l].init(rng);
        dec_[l].init(rng);
    }
    head_.init_xavier(rng);
}

FTensor AttentionUNet::forward(const FTensor& x) {
    if (x.channels() != cfg_.in_channels)
        throw std::invalid_argument("forward: expected " + std::to_string(cfg_.in_channels) +
                                    " channels, got " + std::to_string(x.channels()));
    const int div = 1 << cfg_.depth;
    if (x.rows() % div != 0 || x.cols() % div != 0)
        throw std::invalid_argument("forward: spatial dims must be divisible by " +
                                    std::to_string(div) + ", got " + x.shape_str());

    const bool t = training_;
    std::array<FTensor, 4> skips;
    FTensor cur = x;
    for (int l = 0; l < 4; ++l) {
        skips[l] = enc_[l].forward(cur, t);
        cur = pool_[l].forward(skips[l], t);
    }
    cur = bottleneck_.forward(cur, t);
    for (int l = 3; l >= 0; --l) {
        const FTensor u = up_[l].forward(cur, t);
        const FTensor attended = gates_[l].forward(skips[l], u, t);
        cur = dec_[l].forward(concat_channels(attended, u), t);
    }
    return out_.forward(head_.forward(cur, t), t);
}

void AttentionUNet::backward(const FTensor& gprob) {
    FTensor g = head_.backward(out_.backward(gprob));

    std::array<FTensor, 4> skip_grads;
    for (int l = 0; l <= 3; ++l) {
        FTensor g_attended, g_u;
        split_channels(dec_[l].backward(g), gates_[l].skip_proj.in_channels(), g_attended, g_u);
        auto [g_skip, g_gate] = gates_[l].backward(g_attended);
        for (size_t i = 0; i < g_u.size(); ++i) g_u[i] += g_gate[i];
        skip_grads[l] = std::move(g_skip);
        g = up_[l].backward(g_u);
    }
    g = bottleneck_.backward(g);
    for (int l = 3; l >= 0; --l) {
        FTensor ge = pool_[l].backward(g);
        for (size_t i = 0; i < ge.size(); ++i) ge[i] += skip_grads[l][i];
        g = enc_[l].backward(ge);
    }
}

void AttentionUNet::zero_grad() {
    for (auto& e : enc_) e.zero_grad();
    bottleneck_.zero_grad();
    for (int l = 0; l < 4; ++l) {
        up_[l].zero_grad();
        gates_[l].zero_grad();
        dec_[l].zero_grad();
    }
    head_.zero_grad();
}

std::vector<ParamRef> AttentionUNet::params() {
    std::vector<ParamRef> out;
    for (int l = 0; l < 4; ++l) enc_[l].collect("enc" + std::to_string(l + 1), out);
    bottleneck_.collect("bottleneck", out);
    for (int l = 0; l < 4; ++l) {
        const std::string lvl = std::to_string(l + 1);
        up_[l].collect("up" + lvl, out);
        gates_[l].collect("gate" + lvl, out);
        dec_[l].collect("dec" + lvl, out);
    }
    head_.collect("head", out);
    return out;
}

std::vector<BufferRef> AttentionUNet::buffers() {
    std::vector<BufferRef> out;
    for (int l = 0; l < 4; ++l) enc_[l].collect_buffers("enc" + std::to_string(l + 1), out);
    bottleneck_.collect_buffers("bottleneck", out);
    for (int l = 0; l < 4; ++l) {
        const std::string lvl = std::to_string(l + 1);
        gates_[l].collect_buffers("gate" + lvl, out);
        dec_[l].collect_buffers("dec" + lvl, out);
    }
    return out;
}

} // namespace cthunet
