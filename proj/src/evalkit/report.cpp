#include "rtcm/evalkit/report.hpp"

#include <map>

#include "rtcm/errors.hpp"
#include "rtcm/evalkit/evaluate.hpp"

namespace rtcm::evalkit {

namespace {

std::string field_name(const nlohmann::json& seq) {
    return seq.at("vessel_id").get<std::string>() + "+R" + format_float(seq.at("resistance").get<double>());
}

}  // namespace

ReTable re_table(const std::vector<std::pair<std::string, nlohmann::json>>& summaries) {
    if (summaries.empty()) throw ConfigError("re_table needs at least one evaluation");
    ReTable t;
    t.columns.push_back("Field");
    std::vector<std::map<std::string, double>> per_arm;
    std::vector<std::string> fields;
    std::map<std::string, double> linear;
    try {
        for (std::size_t a = 0; a < summaries.size(); ++a) {
            const auto& [name, summary] = summaries[a];
            t.columns.push_back(name);
            std::map<std::string, double> values;
            std::vector<std::string> arm_fields;
            for (const auto& seq : summary.at("sequences")) {
                const std::string f = field_name(seq);
                values[f] = seq.at("re_network_percent").get<double>();
                arm_fields.push_back(f);
                if (a == 0) linear[f] = seq.at("re_baseline_percent").get<double>();
            }
            if (a == 0) {
                fields = arm_fields;
            } else if (arm_fields != fields) {
                throw ConfigError("evaluation '" + name + "' covers different fields than '" + summaries[0].first + "'");
            }
            per_arm.push_back(std::move(values));
        }
        t.columns.push_back("Linear");
        auto cell = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", v);
            return std::string(buf);
        };
        for (const auto& f : fields) {
            std::vector<std::string> row{f};
            for (const auto& arm : per_arm) row.push_back(cell(arm.at(f)));
            row.push_back(cell(linear.at(f)));
            t.rows.push_back(std::move(row));
        }
        std::vector<std::string> avg{"Average"};
        for (const auto& [name, summary] : summaries) avg.push_back(cell(summary.at("re_network_avg_percent").get<double>()));
        avg.push_back(cell(summaries[0].second.at("re_baseline_avg_percent").get<double>()));
        t.rows.push_back(std::move(avg));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed evaluation summary: ") + e.what());
    }
    return t;
}

std::string ReTable::to_csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
        out += "\n";
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return out;
}

std::string ReTable::to_markdown() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        out += "|";
        for (const auto& c : cells) out += " " + c + " |";
        out += "\n";
    };
    line(columns);
    out += "|";
    for (std::size_t i = 0; i < columns.size(); ++i) out += i ? " ---: |" : " --- |";
    out += "\n";
    for (const auto& r : rows) line(r);
    return out;
}

}  // namespace rtcm::evalkit
