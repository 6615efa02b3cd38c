#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cthunet/oracles.hpp"
#include "cthunet/tensor.hpp"

namespace cthunet {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct CheckSuite {
    std::string scope;
    std::vector<CheckResult> results;
    bool all_pass() const {
        for (const auto& r : results)
            if (!r.pass) return false;
        return true;
    }
};

// A loss under test: returns the value and, when grad is non-null, the
// analytic gradient w.r.t. pred.
using CheckedLoss = std::function<double(const DTensor& pred, DTensor* grad)>;

// Compares the analytic gradient against central finite differences over the
// given evaluation points. Relative error uses a denominator floored at 1e-8.
GradCheckReport grad_check(const std::string& name, const CheckedLoss& fn,
                           const std::vector<DTensor>& points, double step = 1e-5);

constexpr double kGradTol = 1e-4;
constexpr double kOracleTol = 1e-10;

CheckSuite check_losses(uint64_t seed = 0xC0FFEEULL);
CheckSuite check_metrics(uint64_t seed = 0xBEEFULL);
CheckSuite check_gates(uint64_t seed = 0xFACEULL);

// scope: "losses" | "metrics" | "gates" | "all"
std::vector<CheckSuite> run_checks(const std::string& scope);

nlohmann::json checks_json(const std::vector<CheckSuite>& suites);

} // namespace cthunet
