#include "cthunet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <Eigen/Core>

namespace cthunet {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;
using CMapRV = Eigen::Map<const Eigen::RowVectorXf>;
using MapRV = Eigen::Map<Eigen::RowVectorXf>;

// Patch matrix for a horizontal strip of output rows: one row per output
// pixel, columns ordered (ky, kx, ic). Zero padding at the borders.
void im2col3x3(const FTensor& x, int n, int y0, int strip, float* buf) {
    const int h = x.rows(), w = x.cols(), c = x.channels();
    const size_t kk = 9u * c;
    for (int dy = 0; dy < strip; ++dy) {
        const int y = y0 + dy;
        float* row_base = buf + size_t(dy) * w * kk;
        for (int ky = 0; ky < 3; ++ky) {
            const int iy = y + ky - 1;
            for (int kx = 0; kx < 3; ++kx) {
                float* dst0 = row_base + size_t(ky * 3 + kx) * c;
                if (iy < 0 || iy >= h) {
                    for (int ox = 0; ox < w; ++ox)
                        std::memset(dst0 + size_t(ox) * kk, 0, size_t(c) * sizeof(float));
                    continue;
                }
                const float* src_row = &x(n, iy, 0, 0);
                for (int ox = 0; ox < w; ++ox) {
                    const int ix = ox + kx - 1;
                    float* dst = dst0 + size_t(ox) * kk;
                    if (ix < 0 || ix >= w)
                        std::memset(dst, 0, size_t(c) * sizeof(float));
                    else
                        std::memcpy(dst, src_row + size_t(ix) * c, size_t(c) * sizeof(float));
                }
            }
        }
    }
}

// Scatter-add of patch gradients back into the input gradient.
void col2im3x3_add(const float* buf, int n, int y0, int strip, FTensor& gx) {
    const int h = gx.rows(), w = gx.cols(), c = gx.channels();
    const size_t kk = 9u * c;
    for (int dy = 0; dy < strip; ++dy) {
        const int y = y0 + dy;
        const float* row_base = buf + size_t(dy) * w * kk;
        for (int ky = 0; ky < 3; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
                const float* src0 = row_base + size_t(ky * 3 + kx) * c;
                for (int ox = 0; ox < w; ++ox) {
                    const int ix = ox + kx - 1;
                    if (ix < 0 || ix >= w) continue;
                    const float* src = src0 + size_t(ox) * kk;
                    float* dst = &gx(n, iy, ix, 0);
                    for (int ic = 0; ic < c; ++ic) dst[ic] += src[ic];
                }
            }
        }
    }
}

int strip_rows_for(int w, int kk) {
    const size_t budget = 4u << 20; // 4 MiB patch buffer
    const size_t per_row = size_t(w) * kk * sizeof(float);
    return std::max<int>(1, int(budget / std::max<size_t>(per_row, 1)));
}

void fill_normal(std::vector<float>& v, Rng& rng, double stddev) {
    for (auto& x : v) x = float(rng.normal(0.0, stddev));
}

} // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_c, int out_c, int ksize) : in_c_(in_c), out_c_(out_c), k_(ksize) {
    if (ksize != 1 && ksize != 3) throw std::invalid_argument("Conv2d: kernel must be 1 or 3");
    if (in_c < 1 || out_c < 1) throw std::invalid_argument("Conv2d: bad channel counts");
    w.assign(size_t(k_) * k_ * in_c * out_c, 0.0f);
    b.assign(out_c, 0.0f);
    gw.assign(w.size(), 0.0f);
    gb.assign(b.size(), 0.0f);
}

void Conv2d::init_he(Rng& rng) {
    fill_normal(w, rng, std::sqrt(2.0 / (double(k_) * k_ * in_c_)));
    std::fill(b.begin(), b.end(), 0.0f);
}

void Conv2d::init_xavier(Rng& rng) {
    fill_normal(w, rng, std::sqrt(1.0 / (double(k_) * k_ * in_c_)));
    std::fill(b.begin(), b.end(), 0.0f);
}

FTensor Conv2d::forward(const FTensor& x, bool train) {
    if (x.channels() != in_c_)
        throw std::invalid_argument("Conv2d: expected " + std::to_string(in_c_) +
                                    " input channels, got " + std::to_string(x.channels()));
    if (train) x_ = x;

    FTensor y(x.batch(), x.rows(), x.cols(), out_c_);
    const CMapRM W(w.data(), size_t(k_) * k_ * in_c_, out_c_);
    const CMapRV bias(b.data(), out_c_);

    if (k_ == 1) {
        const Eigen::Index rows = Eigen::Index(x.size() / size_t(in_c_));
        CMapRM X(x.data(), rows, in_c_);
        MapRM Y(y.data(), rows, out_c_);
        Y.noalias() = X * W;
        Y.rowwise() += bias;
        return y;
    }

    const int kk = 9 * in_c_;
    const int strip = strip_rows_for(x.cols(), kk);
    std::vector<float> colbuf(size_t(strip) * x.cols() * kk);
    for (int n = 0; n < x.batch(); ++n) {
        for (int y0 = 0; y0 < x.rows(); y0 += strip) {
            const int rows = std::min(strip, x.rows() - y0);
            im2col3x3(x, n, y0, rows, colbuf.data());
            CMapRM P(colbuf.data(), size_t(rows) * x.cols(), kk);
            MapRM Y(&y(n, y0, 0, 0), size_t(rows) * x.cols(), out_c_);
            Y.noalias() = P * W;
            Y.rowwise() += bias;
        }
    }
    return y;
}

FTensor Conv2d::backward(const FTensor& gy) {
    if (x_.empty()) throw std::logic_error("Conv2d::backward without cached forward");
    FTensor gx(x_.batch(), x_.rows(), x_.cols(), in_c_);
    const CMapRM W(w.data(), size_t(k_) * k_ * in_c_, out_c_);
    MapRM GW(gw.data(), size_t(k_) * k_ * in_c_, out_c_);
    MapRV GB(gb.data(), out_c_);

    if (k_ == 1) {
        const Eigen::Index rows = Eigen::Index(x_.size() / size_t(in_c_));
        CMapRM X(x_.data(), rows, in_c_);
        CMapRM GY(gy.data(), rows, out_c_);
        MapRM GX(gx.data(), rows, in_c_);
        GW.noalias() += X.transpose() * GY;
        GB += GY.colwise().sum();
        GX.noalias() = GY * W.transpose();
        return gx;
    }

    const int kk = 9 * in_c_;
    const int strip = strip_rows_for(x_.cols(), kk);
    std::vector<float> colbuf(size_t(strip) * x_.cols() * kk);
    std::vector<float> dpatch(colbuf.size());
    for (int n = 0; n < x_.batch(); ++n) {
        for (int y0 = 0; y0 < x_.rows(); y0 += strip) {
            const int rows = std::min(strip, x_.rows() - y0);
            const Eigen::Index np = Eigen::Index(rows) * x_.cols();
            im2col3x3(x_, n, y0, rows, colbuf.data());
            CMapRM P(colbuf.data(), np, kk);
            CMapRM GY(&gy(n, y0, 0, 0), np, out_c_);
            GW.noalias() += P.transpose() * GY;
            GB += GY.colwise().sum();
            MapRM DP(dpatch.data(), np, kk);
            DP.noalias() = GY * W.transpose();
            col2im3x3_add(dpatch.data(), n, y0, rows, gx);
        }
    }
    return gx;
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

void Conv2d::zero_grad() {
    std::fill(gw.begin(), gw.end(), 0.0f);
    std::fill(gb.begin(), gb.end(), 0.0f);
}

// ---------------------------------------------------------------------------
// TransposedConv2x2

TransposedConv2x2::TransposedConv2x2(int in_c, int out_c) : in_c_(in_c), out_c_(out_c) {
    w.assign(size_t(4) * in_c * out_c, 0.0f);
    b.assign(out_c, 0.0f);
    gw.assign(w.size(), 0.0f);
    gb.assign(b.size(), 0.0f);
}

void TransposedConv2x2::init_he(Rng& rng) {
    fill_normal(w, rng, std::sqrt(2.0 / double(in_c_)));
    std::fill(b.begin(), b.end(), 0.0f);
}

FTensor TransposedConv2x2::forward(const FTensor& x, bool train) {
    if (x.channels() != in_c_) throw std::invalid_argument("TransposedConv2x2: channel mismatch");
    if (train) x_ = x;

    const int h = x.rows(), w_in = x.cols();
    FTensor y(x.batch(), 2 * h, 2 * w_in, out_c_);
    std::vector<float> tmp(size_t(h) * w_in * out_c_);
    for (int n = 0; n < x.batch(); ++n) {
        CMapRM X(&x(n, 0, 0, 0), size_t(h) * w_in, in_c_);
        for (int tap = 0; tap < 4; ++tap) {
            const int di = tap / 2, dj = tap % 2;
            CMapRM Wt(w.data() + size_t(tap) * in_c_ * out_c_, in_c_, out_c_);
            MapRM T(tmp.data(), size_t(h) * w_in, out_c_);
            T.noalias() = X * Wt;
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w_in; ++xx) {
                    const float* src = tmp.data() + (size_t(yy) * w_in + xx) * out_c_;
                    float* dst = &y(n, 2 * yy + di, 2 * xx + dj, 0);
                    for (int oc = 0; oc < out_c_; ++oc) dst[oc] = src[oc] + b[oc];
                }
        }
    }
    return y;
}

FTensor TransposedConv2x2::backward(const FTensor& gy) {
    if (x_.empty()) throw std::logic_error("TransposedConv2x2::backward without cached forward");
    const int h = x_.rows(), w_in = x_.cols();
    FTensor gx(x_.batch(), h, w_in, in_c_);
    std::vector<float> gtap(size_t(h) * w_in * out_c_);
    for (int n = 0; n < x_.batch(); ++n) {
        CMapRM X(&x_(n, 0, 0, 0), size_t(h) * w_in, in_c_);
        MapRM GX(&gx(n, 0, 0, 0), size_t(h) * w_in, in_c_);
        for (int tap = 0; tap < 4; ++tap) {
            const int di = tap / 2, dj = tap % 2;
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w_in; ++xx) {
                    const float* src = &gy(n, 2 * yy + di, 2 * xx + dj, 0);
                    float* dst = gtap.data() + (size_t(yy) * w_in + xx) * out_c_;
                    std::memcpy(dst, src, size_t(out_c_) * sizeof(float));
                }
            CMapRM G(gtap.data(), size_t(h) * w_in, out_c_);
            CMapRM Wt(w.data() + size_t(tap) * in_c_ * out_c_, in_c_, out_c_);
            MapRM GWt(gw.data() + size_t(tap) * in_c_ * out_c_, in_c_, out_c_);
            GWt.noalias() += X.transpose() * G;
            MapRV GB(gb.data(), out_c_);
            GB += G.colwise().sum();
            GX.noalias() += G * Wt.transpose();
        }
    }
    return gx;
}

void TransposedConv2x2::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
}

void TransposedConv2x2::zero_grad() {
    std::fill(gw.begin(), gw.end(), 0.0f);
    std::fill(gb.begin(), gb.end(), 0.0f);
}

// ---------------------------------------------------------------------------
// BilinearUp2x

namespace {
inline void bilinear_coords(int o, int extent, int& i0, int& i1, float& w1) {
    const float s = (o + 0.5f) * 0.5f - 0.5f;
    const float f = std::floor(s);
    i0 = std::clamp(int(f), 0, extent - 1);
    i1 = std::clamp(int(f) + 1, 0, extent - 1);
    w1 = s - f;
}
} // namespace

FTensor BilinearUp2x::forward(const FTensor& x, bool train) {
    if (train) {
        n_ = x.batch();
        h_ = x.rows();
        w_ = x.cols();
        c_ = x.channels();
    }
    FTensor y(x.batch(), 2 * x.rows(), 2 * x.cols(), x.channels());
    const int c = x.channels();
    for (int n = 0; n < x.batch(); ++n)
        for (int oy = 0; oy < y.rows(); ++oy) {
            int y0, y1;
            float wy;
            bilinear_coords(oy, x.rows(), y0, y1, wy);
            for (int ox = 0; ox < y.cols(); ++ox) {
                int x0, x1;
                float wx;
                bilinear_coords(ox, x.cols(), x0, x1, wx);
                const float* p00 = &x(n, y0, x0, 0);
                const float* p01 = &x(n, y0, x1, 0);
                const float* p10 = &x(n, y1, x0, 0);
                const float* p11 = &x(n, y1, x1, 0);
                float* dst = &y(n, oy, ox, 0);
                for (int ch = 0; ch < c; ++ch)
                    dst[ch] = (1 - wy) * ((1 - wx) * p00[ch] + wx * p01[ch]) +
                              wy * ((1 - wx) * p10[ch] + wx * p11[ch]);
            }
        }
    return y;
}

FTensor BilinearUp2x::backward(const FTensor& gy) {
    FTensor gx(n_, h_, w_, c_);
    for (int n = 0; n < n_; ++n)
        for (int oy = 0; oy < gy.rows(); ++oy) {
            int y0, y1;
            float wy;
            bilinear_coords(oy, h_, y0, y1, wy);
            for (int ox = 0; ox < gy.cols(); ++ox) {
                int x0, x1;
                float wx;
                bilinear_coords(ox, w_, x0, x1, wx);
                const float* g = &gy(n, oy, ox, 0);
                for (int ch = 0; ch < c_; ++ch) {
                    gx(n, y0, x0, ch) += (1 - wy) * (1 - wx) * g[ch];
                    gx(n, y0, x1, ch) += (1 - wy) * wx * g[ch];
                    gx(n, y1, x0, ch) += wy * (1 - wx) * g[ch];
                    gx(n, y1, x1, ch) += wy * wx * g[ch];
                }
            }
        }
    return gx;
}

// ---------------------------------------------------------------------------
// MaxPool2x2

FTensor MaxPool2x2::forward(const FTensor& x, bool train) {
    if (x.rows() % 2 || x.cols() % 2)
        throw std::invalid_argument("MaxPool2x2: spatial dims must be even");
    const int oh = x.rows() / 2, ow = x.cols() / 2, c = x.channels();
    FTensor y(x.batch(), oh, ow, c);
    if (train) {
        n_ = x.batch();
        h_ = x.rows();
        w_ = x.cols();
        c_ = c;
        argmax_.assign(y.size(), 0);
    }
    for (int n = 0; n < x.batch(); ++n)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox)
                for (int ch = 0; ch < c; ++ch) {
                    float best = x(n, 2 * oy, 2 * ox, ch);
                    uint8_t arg = 0;
                    for (uint8_t t = 1; t < 4; ++t) {
                        const float v = x(n, 2 * oy + t / 2, 2 * ox + t % 2, ch);
                        if (v > best) {
                            best = v;
                            arg = t;
                        }
                    }
                    y(n, oy, ox, ch) = best;
                    if (train)
                        argmax_[((size_t(n) * oh + oy) * ow + ox) * c + ch] = arg;
                }
    return y;
}

FTensor MaxPool2x2::backward(const FTensor& gy) {
    FTensor gx(n_, h_, w_, c_);
    const int oh = h_ / 2, ow = w_ / 2;
    for (int n = 0; n < n_; ++n)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox)
                for (int ch = 0; ch < c_; ++ch) {
                    const uint8_t t = argmax_[((size_t(n) * oh + oy) * ow + ox) * c_ + ch];
                    gx(n, 2 * oy + t / 2, 2 * ox + t % 2, ch) += gy(n, oy, ox, ch);
                }
    return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels) : c_(channels) {
    gamma.assign(channels, 1.0f);
    beta.assign(channels, 0.0f);
    g_gamma.assign(channels, 0.0f);
    g_beta.assign(channels, 0.0f);
    running_mean.assign(channels, 0.0f);
    running_var.assign(channels, 1.0f);
}

FTensor BatchNorm2d::forward(const FTensor& x, bool train) {
    if (x.channels() != c_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
    FTensor y(x.batch(), x.rows(), x.cols(), c_);
    const size_t count = x.size() / size_t(c_);

    if (!train) {
        for (size_t i = 0; i < x.size(); i += c_)
            for (int ch = 0; ch < c_; ++ch) {
                const float inv = 1.0f / std::sqrt(running_var[ch] + eps);
                y[i + ch] = gamma[ch] * (x[i + ch] - running_mean[ch]) * inv + beta[ch];
            }
        return y;
    }

    std::vector<double> mean(c_, 0.0), var(c_, 0.0);
    for (size_t i = 0; i < x.size(); i += c_)
        for (int ch = 0; ch < c_; ++ch) mean[ch] += x[i + ch];
    for (int ch = 0; ch < c_; ++ch) mean[ch] /= double(count);
    for (size_t i = 0; i < x.size(); i += c_)
        for (int ch = 0; ch < c_; ++ch) {
            const double d = x[i + ch] - mean[ch];
            var[ch] += d * d;
        }
    for (int ch = 0; ch < c_; ++ch) var[ch] /= double(count);

    xhat_ = FTensor(x.batch(), x.rows(), x.cols(), c_);
    inv_std_.resize(c_);
    for (int ch = 0; ch < c_; ++ch) inv_std_[ch] = float(1.0 / std::sqrt(var[ch] + eps));
    for (size_t i = 0; i < x.size(); i += c_)
        for (int ch = 0; ch < c_; ++ch) {
            const float xh = (x[i + ch] - float(mean[ch])) * inv_std_[ch];
            xhat_[i + ch] = xh;
            y[i + ch] = gamma[ch] * xh + beta[ch];
        }

    const double unbias = count > 1 ? double(count) / double(count - 1) : 1.0;
    for (int ch = 0; ch < c_; ++ch) {
        running_mean[ch] = (1.0f - momentum) * running_mean[ch] + momentum * float(mean[ch]);
        running_var[ch] = (1.0f - momentum) * running_var[ch] + momentum * float(var[ch] * unbias);
    }
    return y;
}

FTensor BatchNorm2d::backward(const FTensor& gy) {
    if (xhat_.empty()) throw std::logic_error("BatchNorm2d::backward without cached forward");
    const size_t count = gy.size() / size_t(c_);
    std::vector<double> sum_gy(c_, 0.0), sum_gy_xhat(c_, 0.0);
    for (size_t i = 0; i < gy.size(); i += c_)
        for (int ch = 0; ch < c_; ++ch) {
            sum_gy[ch] += gy[i + ch];
            sum_gy_xhat[ch] += gy[i + ch] * xhat_[i + ch];
        }
    for (int ch = 0; ch < c_; ++ch) {
        g_gamma[ch] += float(sum_gy_xhat[ch]);
        g_beta[ch] += float(sum_gy[ch]);
    }
    FTensor gx(gy.batch(), gy.rows(), gy.cols(), c_);
    for (size_t i = 0; i < gy.size(); i += c_)
        for (int ch = 0; ch < c_; ++ch) {
            const double centered = gy[i + ch] - sum_gy[ch] / double(count) -
                                    xhat_[i + ch] * sum_gy_xhat[ch] / double(count);
            gx[i + ch] = float(gamma[ch] * inv_std_[ch] * centered);
        }
    return gx;
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, &g_gamma});
    out.push_back({prefix + ".beta", &beta, &g_beta});
}

void BatchNorm2d::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
    out.push_back({prefix + ".running_mean", &running_mean});
    out.push_back({prefix + ".running_var", &running_var});
}

void BatchNorm2d::zero_grad() {
    std::fill(g_gamma.begin(), g_gamma.end(), 0.0f);
    std::fill(g_beta.begin(), g_beta.end(), 0.0f);
}

// ---------------------------------------------------------------------------
// Activations

FTensor ReLU::forward(const FTensor& x, bool train) {
    FTensor y(x.batch(), x.rows(), x.cols(), x.channels());
    if (train) mask_.assign(x.size(), 0);
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0f) {
            y[i] = x[i];
            if (train) mask_[i] = 1;
        }
    }
    return y;
}

FTensor ReLU::backward(const FTensor& gy) {
    FTensor gx(gy.batch(), gy.rows(), gy.cols(), gy.channels());
    for (size_t i = 0; i < gy.size(); ++i) gx[i] = mask_[i] ? gy[i] : 0.0f;
    return gx;
}

FTensor Sigmoid::forward(const FTensor& x, bool train) {
    FTensor y(x.batch(), x.rows(), x.cols(), x.channels());
    for (size_t i = 0; i < x.size(); ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
    if (train) y_ = y;
    return y;
}

FTensor Sigmoid::backward(const FTensor& gy) {
    FTensor gx(gy.batch(), gy.rows(), gy.cols(), gy.channels());
    for (size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * y_[i] * (1.0f - y_[i]);
    return gx;
}

// ---------------------------------------------------------------------------
// Channel concat/split

FTensor concat_channels(const FTensor& a, const FTensor& b) {
    if (a.batch() != b.batch() || a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("concat_channels: spatial/batch mismatch");
    const int ca = a.channels(), cb = b.channels();
    FTensor y(a.batch(), a.rows(), a.cols(), ca + cb);
    const size_t pixels = a.size() / size_t(ca);
    for (size_t p = 0; p < pixels; ++p) {
        std::memcpy(y.data() + p * (ca + cb), a.data() + p * ca, size_t(ca) * sizeof(float));
        std::memcpy(y.data() + p * (ca + cb) + ca, b.data() + p * cb, size_t(cb) * sizeof(float));
    }
    return y;
}

void split_channels(const FTensor& g, int c_first, FTensor& ga, FTensor& gb) {
    const int ct = g.channels(), cb = ct - c_first;
    ga = FTensor(g.batch(), g.rows(), g.cols(), c_first);
    gb = FTensor(g.batch(), g.rows(), g.cols(), cb);
    const size_t pixels = g.size() / size_t(ct);
    for (size_t p = 0; p < pixels; ++p) {
        std::memcpy(ga.data() + p * c_first, g.data() + p * ct, size_t(c_first) * sizeof(float));
        std::memcpy(gb.data() + p * cb, g.data() + p * ct + c_first, size_t(cb) * sizeof(float));
    }
    return;
}

} // namespace cthunet
