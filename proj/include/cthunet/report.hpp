#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cthunet/metrics.hpp"
#include "cthunet/oracles.hpp"

namespace cthunet {

// Aligned-column table with one row per entry:
//   <label_col> | Dice | Sensitivity | Specificity
std::string metrics_table(const std::vector<std::pair<std::string, AggregateMetrics>>& rows,
                          const std::string& label_col = "Model");

nlohmann::json metrics_report_json(const MetricsReport& report);
nlohmann::json grad_check_json(const GradCheckReport& report);

// Full-scale results published for this model family, reported alongside
// desk-scale numbers for orientation (never asserted).
struct ReferenceRow {
    const char* name;
    double dice, sensitivity, specificity;
};

inline constexpr ReferenceRow kReferenceProposed{"attention U-Net + Bi-H", 0.8947, 0.7377, 0.9997};

inline constexpr ReferenceRow kReferenceLossAblation[4] = {
    {"BCE", 0.8463, 0.7267, 0.9997},
    {"Dice+Boundary", 0.8757, 0.7186, 0.9997},
    {"BCE+Dice", 0.8820, 0.7309, 0.9996},
    {"Bi-H", 0.8947, 0.7377, 0.9997},
};

} // namespace cthunet
