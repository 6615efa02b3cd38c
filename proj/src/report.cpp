#include "cthunet/report.hpp"

#include <cstdio>
#include <sstream>

namespace cthunet {

std::string metrics_table(const std::vector<std::pair<std::string, AggregateMetrics>>& rows,
                          const std::string& label_col) {
    size_t width = label_col.size();
    for (const auto& [name, _] : rows) width = std::max(width, name.size());

    std::ostringstream os;
    char buf[64];
    os << label_col << std::string(width - label_col.size(), ' ')
       << " | Dice   | Sensitivity | Specificity\n";
    os << std::string(width, '-') << "-+--------+-------------+------------\n";
    for (const auto& [name, m] : rows) {
        std::snprintf(buf, sizeof(buf), " | %.4f | %.4f      | %.4f\n", m.dice, m.sensitivity,
                      m.specificity);
        os << name << std::string(width - name.size(), ' ') << buf;
    }
    return os.str();
}

nlohmann::json metrics_report_json(const MetricsReport& report) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : report.per_sample) {
        per.push_back({{"id", s.id},
                       {"dice", s.dice},
                       {"sensitivity", s.sensitivity},
                       {"specificity", s.specificity},
                       {"degenerate", s.degenerate},
                       {"tp", s.counts.tp},
                       {"fp", s.counts.fp},
                       {"tn", s.counts.tn},
                       {"fn", s.counts.fn}});
    }
    return nlohmann::json{
        {"threshold", report.threshold},
        {"per_sample", per},
        {"aggregate",
         {{"micro",
           {{"dice", report.micro.dice},
            {"sensitivity", report.micro.sensitivity},
            {"specificity", report.micro.specificity}}},
          {"macro",
           {{"dice", report.macro.dice},
            {"sensitivity", report.macro.sensitivity},
            {"specificity", report.macro.specificity}}}}},
        {"summed_counts",
         {{"tp", report.summed.tp},
          {"fp", report.summed.fp},
          {"tn", report.summed.tn},
          {"fn", report.summed.fn}}}};
}

nlohmann::json grad_check_json(const GradCheckReport& report) {
    return nlohmann::json{{"component", report.component},
                          {"max_abs_error", report.max_abs_error},
                          {"max_rel_error", report.max_rel_error},
                          {"rows", report.rows},
                          {"cols", report.cols},
                          {"step", report.step}};
}

} // namespace cthunet
