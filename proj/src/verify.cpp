#include "cthunet/verify.hpp"

#include <cmath>
#include <cstdio>

#include "cthunet/distance.hpp"
#include "cthunet/losses.hpp"
#include "cthunet/metrics.hpp"
#include "cthunet/model.hpp"
#include "cthunet/rng.hpp"

namespace cthunet {

namespace {

std::string fmt(const char* format, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), format, a, b);
    return buf;
}

DTensor random_pred(Rng& rng, int batch, int rows, int cols) {
    DTensor t(batch, rows, cols, 1);
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(0.02, 0.98);
    return t;
}

DTensor random_binary(Rng& rng, int batch, int rows, int cols) {
    DTensor t(batch, rows, cols, 1);
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.coin() ? 1.0 : 0.0;
    return t;
}

ImageU8 mask_from(const DTensor& t, int b) {
    ImageU8 m(t.rows(), t.cols());
    for (int r = 0; r < t.rows(); ++r)
        for (int c = 0; c < t.cols(); ++c) m.at(r, c) = t(b, r, c, 0) > 0.5 ? 1 : 0;
    return m;
}

DTensor sdm_for(const DTensor& target) {
    DTensor phi(target.batch(), target.rows(), target.cols(), 1);
    for (int b = 0; b < target.batch(); ++b) {
        MaskImage m{mask_from(target, b)};
        const SignedDistanceMap s = signed_distance_map(m);
        for (int r = 0; r < target.rows(); ++r)
            for (int c = 0; c < target.cols(); ++c) phi(b, r, c, 0) = s.phi.at(r, c);
    }
    return phi;
}

DTensor row_tensor(std::initializer_list<double> values) {
    DTensor t(1, 1, int(values.size()), 1);
    size_t i = 0;
    for (double v : values) t[i++] = v;
    return t;
}

} // namespace

GradCheckReport grad_check(const std::string& name, const CheckedLoss& fn,
                           const std::vector<DTensor>& points, double step) {
    GradCheckReport rep;
    rep.component = name;
    rep.step = step;
    for (const auto& p : points) {
        rep.rows = p.rows();
        rep.cols = p.cols();
        DTensor analytic;
        fn(p, &analytic);
        const DTensor numeric =
            finite_diff_grad([&fn](const DTensor& q) { return fn(q, nullptr); }, p, step);
        for (size_t i = 0; i < analytic.size(); ++i) {
            const double abs_err = std::abs(analytic[i] - numeric[i]);
            const double rel_err = abs_err / std::max(std::abs(numeric[i]), 1e-8);
            rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
            rep.max_rel_error = std::max(rep.max_rel_error, rel_err);
        }
    }
    return rep;
}

CheckSuite check_losses(uint64_t seed) {
    CheckSuite suite;
    suite.scope = "losses";
    Rng rng(seed);

    // --- gradient checks: 20 random 8x8 instances per component
    struct Component {
        std::string name;
        std::function<CheckedLoss(const DTensor& target, const DTensor& sdm)> bind;
    };
    const LossConfig half; // alpha = beta = 0.5
    const std::vector<Component> components = {
        {"wbce-hed",
         [](const DTensor& t, const DTensor&) -> CheckedLoss {
             return [t](const DTensor& p, DTensor* g) {
                 return weighted_bce(p, t, BceWeighting::HedClassBalance, g);
             };
         }},
        {"wbce-uniform",
         [](const DTensor& t, const DTensor&) -> CheckedLoss {
             return [t](const DTensor& p, DTensor* g) {
                 return weighted_bce(p, t, BceWeighting::Uniform, g);
             };
         }},
        {"dice",
         [](const DTensor& t, const DTensor&) -> CheckedLoss {
             return [t](const DTensor& p, DTensor* g) { return dice_loss(p, t, 1.0, g); };
         }},
        {"hinge",
         [](const DTensor& t, const DTensor&) -> CheckedLoss {
             return [t](const DTensor& p, DTensor* g) { return squared_hinge(p, t, g); };
         }},
        {"boundary",
         [](const DTensor&, const DTensor& s) -> CheckedLoss {
             return [s](const DTensor& p, DTensor* g) { return boundary_loss(p, s, g); };
         }},
        {"bi-h@0.5",
         [half](const DTensor& t, const DTensor& s) -> CheckedLoss {
             return [t, s, half](const DTensor& p, DTensor* g) {
                 return bi_h_loss(p, t, s, half, g).total;
             };
         }},
    };
    for (const auto& comp : components) {
        double worst_rel = 0.0, worst_abs = 0.0;
        for (int inst = 0; inst < 20; ++inst) {
            const DTensor target = random_binary(rng, 1, 8, 8);
            const DTensor sdm = sdm_for(target);
            const DTensor pred = random_pred(rng, 1, 8, 8);
            const auto rep = grad_check(comp.name, comp.bind(target, sdm), {pred});
            worst_rel = std::max(worst_rel, rep.max_rel_error);
            worst_abs = std::max(worst_abs, rep.max_abs_error);
        }
        suite.results.push_back({"grad/" + comp.name, worst_rel < kGradTol,
                                 fmt("max_rel=%.3e (tol %.0e, 20x 8x8)", worst_rel, kGradTol)});
    }

    // --- oracle equivalence: 50 random instances up to 8x8
    double worst[5] = {0, 0, 0, 0, 0};
    const char* names[5] = {"wbce", "dice", "hinge", "boundary", "bi-h"};
    for (int inst = 0; inst < 50; ++inst) {
        const int rows = 1 + rng.below(8), cols = 1 + rng.below(8);
        const int batch = inst % 10 == 9 ? 2 : 1;
        const DTensor target = random_binary(rng, batch, rows, cols);
        const DTensor sdm = sdm_for(target);
        const DTensor pred = random_pred(rng, batch, rows, cols);
        OracleParams op;
        const double impl[5] = {
            weighted_bce(pred, target, BceWeighting::HedClassBalance),
            dice_loss(pred, target, 1.0),
            squared_hinge(pred, target),
            boundary_loss(pred, sdm),
            bi_h_loss(pred, target, sdm, half).total,
        };
        for (int k = 0; k < 5; ++k) {
            const double oracle = tiny_loss_oracle(names[k], pred, target, sdm, op);
            worst[k] = std::max(worst[k], std::abs(impl[k] - oracle));
        }
    }
    for (int k = 0; k < 5; ++k)
        suite.results.push_back({std::string("oracle/") + names[k], worst[k] < kOracleTol,
                                 fmt("max_abs=%.3e (tol %.0e, 50 instances)", worst[k], kOracleTol)});

    // --- worked examples, fixed by hand evaluation of the closed forms
    {
        const double ln2 = 0.69314718055994530942;
        struct Example {
            std::string name;
            double got, want, tol;
        };
        DTensor half_pos = row_tensor({0, 0, 1, 1});
        DTensor p_half = DTensor::full(1, 1, 4, 1, 0.5);
        DTensor ones = DTensor::full(1, 4, 4, 1, 1.0);
        DTensor zeros = DTensor::full(1, 4, 4, 1, 0.0);
        DTensor sdm_010 = row_tensor({1, -1, 1});
        DTensor p_one3 = DTensor::full(1, 1, 3, 1, 1.0);
        DTensor ind3 = row_tensor({0, 1, 0});
        LossConfig cfg_half;
        const double composite =
            bi_h_loss(p_half, half_pos, row_tensor({2, 1, -1, -1}), cfg_half).total;
        const std::vector<Example> examples = {
            {"wbce hed half-positive p=0.5", weighted_bce(p_half, half_pos, BceWeighting::HedClassBalance),
             0.5 * ln2, 1e-12},
            {"wbce uniform p=0.5", weighted_bce(p_half, half_pos, BceWeighting::Uniform), ln2, 1e-12},
            {"dice all-wrong 16px", dice_loss(ones, zeros, 1.0), 1.0 - 1.0 / 17.0, 1e-12},
            {"dice p=0.5 y=1 n=4", dice_loss(p_half, DTensor::full(1, 1, 4, 1, 1.0), 1.0),
             1.0 - 5.0 / 7.0, 1e-12},
            {"hinge p=0.5", squared_hinge(p_half, half_pos), 1.0, 1e-12},
            {"hinge p=0 y=1", squared_hinge(DTensor::full(1, 1, 4, 1, 0.0), DTensor::full(1, 1, 4, 1, 1.0)),
             4.0, 1e-12},
            {"boundary p=1 phi=[1,-1,1]", boundary_loss(p_one3, sdm_010), 1.0 / 3.0, 1e-12},
            {"boundary p=mask phi=[1,-1,1]", boundary_loss(ind3, sdm_010), -1.0 / 3.0, 1e-12},
            {"bi-h composite 0.93579", composite, 0.93579, 1e-5},
        };
        for (const auto& ex : examples)
            suite.results.push_back({"example/" + ex.name, std::abs(ex.got - ex.want) < ex.tol,
                                     fmt("got=%.6f want=%.6f", ex.got, ex.want)});
    }
    return suite;
}

CheckSuite check_metrics(uint64_t seed) {
    CheckSuite suite;
    suite.scope = "metrics";
    Rng rng(seed);

    // --- metric oracle equivalence on 200 random 16x16 mask pairs
    int mismatches = 0;
    for (int inst = 0; inst < 200; ++inst) {
        ImageU8 pred(16, 16), gt(16, 16);
        // sweep densities so degenerate all-empty pairs occur
        const double dp = inst < 10 ? 0.0 : rng.uniform(0.0, 1.0);
        const double dg = inst < 5 ? 0.0 : rng.uniform(0.0, 1.0);
        for (size_t i = 0; i < pred.size(); ++i) {
            pred.v[i] = rng.uniform() < dp ? 1 : 0;
            gt.v[i] = rng.uniform() < dg ? 1 : 0;
        }
        const ConfusionCounts c = confusion(pred, gt);
        const OracleMetrics om = brute_force_metrics(pred, gt);
        if (dice_coefficient(c) != om.dice || sensitivity(c) != om.sensitivity ||
            specificity(c) != om.specificity)
            ++mismatches;
    }
    suite.results.push_back({"oracle/metrics-200x16x16", mismatches == 0,
                             fmt("%.0f mismatches of %.0f", double(mismatches), 200.0)});

    // --- hand-counted confusion cases
    {
        ImageU8 pred(1, 4), gt(1, 4);
        pred.v = {1, 1, 0, 0};
        gt.v = {1, 0, 1, 0};
        const ConfusionCounts c = confusion(pred, gt);
        const bool ok = c.tp == 1 && c.fp == 1 && c.fn == 1 && c.tn == 1 &&
                        dice_coefficient(c) == 0.5 && sensitivity(c) == 0.5 &&
                        specificity(c) == 0.5;
        suite.results.push_back({"example/confusion-1100-vs-1010", ok, "tp=fp=fn=tn=1, all 0.5"});
    }

    // --- distance-map oracle: 100 random masks up to 16x16, exact match
    int sdm_bad = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const int rows = 1 + rng.below(16), cols = 1 + rng.below(16);
        MaskImage m;
        m.pixels = ImageU8(rows, cols);
        const double density = rng.uniform(0.0, 1.0);
        for (size_t i = 0; i < m.pixels.size(); ++i) m.pixels.v[i] = rng.uniform() < density ? 1 : 0;
        const SignedDistanceMap got = signed_distance_map(m);
        const ImageD want = brute_force_sdm(m.pixels);
        for (size_t i = 0; i < want.size(); ++i)
            if (got.phi.v[i] != want.v[i]) {
                ++sdm_bad;
                break;
            }
    }
    suite.results.push_back({"oracle/sdm-100-random", sdm_bad == 0,
                             fmt("%.0f mismatching masks of %.0f", double(sdm_bad), 100.0)});
    {
        MaskImage m;
        m.pixels = ImageU8(1, 3);
        m.pixels.v = {0, 1, 0};
        const auto phi = signed_distance_map(m).phi;
        const bool ok1 = phi.v[0] == 1.0 && phi.v[1] == -1.0 && phi.v[2] == 1.0;
        m.pixels = ImageU8(1, 5);
        m.pixels.v = {0, 0, 1, 1, 0};
        const auto phi2 = signed_distance_map(m).phi;
        const bool ok2 = phi2.v[0] == 2.0 && phi2.v[1] == 1.0 && phi2.v[2] == -1.0 &&
                         phi2.v[3] == -1.0 && phi2.v[4] == 1.0;
        suite.results.push_back({"example/sdm-hand-cases", ok1 && ok2,
                                 "[0,1,0] -> [1,-1,1]; [0,0,1,1,0] -> [2,1,-1,-1,1]"});
    }
    return suite;
}

CheckSuite check_gates(uint64_t seed) {
    CheckSuite suite;
    suite.scope = "gates";
    Rng rng(seed);

    // --- coefficient range on 100 random parameter/input draws
    int out_of_range = 0;
    bool shape_ok = true;
    const int sizes[3] = {4, 8, 16};
    const int chans[4] = {2, 4, 8, 16};
    for (int draw = 0; draw < 100; ++draw) {
        const int h = sizes[rng.below(3)], w = sizes[rng.below(3)];
        const int cs = chans[rng.below(4)], cg = chans[rng.below(4)];
        const Norm::Mode nm = draw % 2 ? Norm::Mode::Batch : Norm::Mode::None;
        AttentionGate gate(cs, cg, nm);
        auto randomize = [&rng](Conv2d& conv) {
            for (auto& v : conv.w) v = float(rng.normal(0.0, 0.5));
            for (auto& v : conv.b) v = float(rng.normal(0.0, 0.5));
        };
        randomize(gate.skip_proj);
        randomize(gate.gate_proj);
        randomize(gate.attn_proj);

        FTensor skip(1, h, w, cs), gsig(1, h, w, cg);
        for (size_t i = 0; i < skip.size(); ++i) skip[i] = float(rng.normal(0.0, 1.0));
        for (size_t i = 0; i < gsig.size(); ++i) gsig[i] = float(rng.normal(0.0, 1.0));

        const FTensor a = gate.coefficients(skip, gsig);
        for (size_t i = 0; i < a.size(); ++i)
            if (!(a[i] > 0.0f && a[i] < 1.0f)) ++out_of_range;

        const FTensor y = gate.forward(skip, gsig, false);
        shape_ok = shape_ok && y.same_shape(skip);
    }
    suite.results.push_back({"gate/coefficients-in-(0,1)", out_of_range == 0,
                             fmt("%.0f coefficients outside (0,1) over %.0f draws",
                                 double(out_of_range), 100.0)});
    suite.results.push_back({"gate/output-shape-equals-skip", shape_ok, "100 draws"});

    // --- zero parameters -> a = sigmoid(0) = 0.5 exactly
    {
        double worst = 0.0;
        for (const Norm::Mode nm : {Norm::Mode::None, Norm::Mode::Batch}) {
            AttentionGate gate(8, 16, nm); // convs start zero-initialized
            FTensor skip(2, 8, 8, 8), gsig(2, 8, 8, 16);
            Rng r2(seed + 1);
            for (size_t i = 0; i < skip.size(); ++i) skip[i] = float(r2.normal(0.0, 1.0));
            for (size_t i = 0; i < gsig.size(); ++i) gsig[i] = float(r2.normal(0.0, 1.0));
            const FTensor y = gate.forward(skip, gsig, false);
            for (size_t i = 0; i < y.size(); ++i)
                worst = std::max(worst, std::abs(double(y[i]) - 0.5 * skip[i]));
        }
        suite.results.push_back({"gate/zero-params-halves-skip", worst < 1e-6,
                                 fmt("max |y - skip/2| = %.3e (tol %.0e)", worst, 1e-6)});
    }

    // --- the default model carries exactly 4 gates
    {
        AttentionUNet model{ModelConfig{}};
        suite.results.push_back({"gate/default-model-has-4",
                                 model.num_attention_gates() == 4,
                                 fmt("count=%.0f", double(model.num_attention_gates()), 0.0)});
    }
    return suite;
}

std::vector<CheckSuite> run_checks(const std::string& scope) {
    std::vector<CheckSuite> out;
    if (scope == "losses" || scope == "all") out.push_back(check_losses());
    if (scope == "metrics" || scope == "all") out.push_back(check_metrics());
    if (scope == "gates" || scope == "all") out.push_back(check_gates());
    if (out.empty())
        throw std::invalid_argument("unknown check scope '" + scope +
                                    "' (expected losses, metrics, gates or all)");
    return out;
}

nlohmann::json checks_json(const std::vector<CheckSuite>& suites) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : suites) {
        nlohmann::json results = nlohmann::json::array();
        for (const auto& r : s.results)
            results.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        arr.push_back({{"scope", s.scope}, {"pass", s.all_pass()}, {"results", results}});
    }
    return arr;
}

} // namespace cthunet
