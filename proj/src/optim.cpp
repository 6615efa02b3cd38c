#include "cthunet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace cthunet {

Adam::Adam(std::vector<ParamRef> params, double lr, double beta1, double beta2, double eps)
    : Optimizer(std::move(params), lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i].value->size(), 0.0f);
        v_[i].assign(params_[i].value->size(), 0.0f);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i].value;
        const auto& g = *params_[i].grad;
        for (size_t j = 0; j < p.size(); ++j) {
            m_[i][j] = float(beta1_ * m_[i][j] + (1.0 - beta1_) * g[j]);
            v_[i][j] = float(beta2_ * v_[i][j] + (1.0 - beta2_) * double(g[j]) * g[j]);
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            p[j] -= float(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

std::vector<std::vector<float>> Adam::state() const {
    std::vector<std::vector<float>> out;
    out.reserve(m_.size() + v_.size());
    for (const auto& m : m_) out.push_back(m);
    for (const auto& v : v_) out.push_back(v);
    return out;
}

void Adam::load_state(const std::vector<std::vector<float>>& s, uint64_t t) {
    if (s.size() != m_.size() + v_.size())
        throw std::runtime_error("adam: optimizer state does not match parameter layout");
    for (size_t i = 0; i < m_.size(); ++i) m_[i] = s[i];
    for (size_t i = 0; i < v_.size(); ++i) v_[i] = s[m_.size() + i];
    t_ = t;
}

void Sgd::step() {
    for (auto& pr : params_) {
        auto& p = *pr.value;
        const auto& g = *pr.grad;
        for (size_t j = 0; j < p.size(); ++j) p[j] -= float(lr_ * g[j]);
    }
}

double ReduceOnPlateau::step(double metric, double current_lr) {
    if (metric > best_ + min_delta_) {
        best_ = metric;
        bad_ = 0;
        return current_lr;
    }
    if (++bad_ >= patience_) {
        bad_ = 0;
        return std::max(current_lr * factor_, min_lr_);
    }
    return current_lr;
}

} // namespace cthunet
