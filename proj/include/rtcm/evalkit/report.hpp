#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace rtcm::evalkit {

// Relative-error comparison in the layout Field | <arm>... | Linear with an
// Average row. Each input is (arm name, summary.json of its evaluation); the
// Linear column comes from the first arm's baseline. Throws ConfigError when
// the arms were evaluated on different fields.
struct ReTable {
    std::vector<std::string> columns;  // "Field", arms..., "Linear"
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
    std::string to_markdown() const;
};

ReTable re_table(const std::vector<std::pair<std::string, nlohmann::json>>& summaries);

}  // namespace rtcm::evalkit
