#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cthunet {

// Dense NHWC tensor (batch, height, width, channels). Channels-last is the
// layout every layer kernel assumes.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    Tensor(int n, int h, int w, int c) : n_(n), h_(h), w_(w), c_(c) {
        if (n <= 0 || h <= 0 || w <= 0 || c <= 0)
            throw std::invalid_argument("Tensor: all dimensions must be positive");
        data_.assign(static_cast<size_t>(n) * h * w * c, T{});
    }

    static Tensor full(int n, int h, int w, int c, T value) {
        Tensor t(n, h, w, c);
        t.fill(value);
        return t;
    }

    int batch() const { return n_; }
    int rows() const { return h_; }
    int cols() const { return w_; }
    int channels() const { return c_; }

    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator()(int n, int h, int w, int c) {
        return data_[((static_cast<size_t>(n) * h_ + h) * w_ + w) * c_ + c];
    }
    const T& operator()(int n, int h, int w, int c) const {
        return data_[((static_cast<size_t>(n) * h_ + h) * w_ + w) * c_ + c];
    }

    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& o) const {
        return n_ == o.n_ && h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
    }

    void fill(T v) { data_.assign(data_.size(), v); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(n_, h_, w_, c_);
        for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    std::string shape_str() const {
        return "(" + std::to_string(n_) + "," + std::to_string(h_) + "," +
               std::to_string(w_) + "," + std::to_string(c_) + ")";
    }

private:
    int n_ = 0, h_ = 0, w_ = 0, c_ = 0;
    std::vector<T> data_;
};

using FTensor = Tensor<float>;
using DTensor = Tensor<double>;

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

} // namespace cthunet
