#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cthunet/layers.hpp"

namespace cthunet {

class Optimizer {
public:
    explicit Optimizer(std::vector<ParamRef> params, double lr)
        : params_(std::move(params)), lr_(lr) {}
    virtual ~Optimizer() = default;

    virtual void step() = 0;
    virtual const char* name() const = 0;

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    // Flattened internal state for checkpointing (slot vectors plus a step
    // counter encoded by the concrete optimizer).
    virtual std::vector<std::vector<float>> state() const { return {}; }
    virtual void load_state(const std::vector<std::vector<float>>& s, uint64_t t) { (void)s; (void)t; }
    virtual uint64_t step_count() const { return 0; }

protected:
    std::vector<ParamRef> params_;
    double lr_;
};

class Adam : public Optimizer {
public:
    Adam(std::vector<ParamRef> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);
    void step() override;
    const char* name() const override { return "adam"; }
    std::vector<std::vector<float>> state() const override;
    void load_state(const std::vector<std::vector<float>>& s, uint64_t t) override;
    uint64_t step_count() const override { return t_; }

private:
    double beta1_, beta2_, eps_;
    uint64_t t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

class Sgd : public Optimizer {
public:
    Sgd(std::vector<ParamRef> params, double lr) : Optimizer(std::move(params), lr) {}
    void step() override;
    const char* name() const override { return "sgd"; }
};

// Halves the learning rate (down to min_lr) after `patience` epochs without
// a validation-metric improvement of at least min_delta.
class ReduceOnPlateau {
public:
    ReduceOnPlateau(double factor = 0.5, int patience = 5, double min_lr = 1e-6,
                    double min_delta = 1e-4)
        : factor_(factor), patience_(patience), min_lr_(min_lr), min_delta_(min_delta) {}

    double step(double metric, double current_lr);

private:
    double factor_;
    int patience_;
    double min_lr_;
    double min_delta_;
    double best_ = -1e300;
    int bad_ = 0;
};

} // namespace cthunet
