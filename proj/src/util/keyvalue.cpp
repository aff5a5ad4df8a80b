#include "rtcm/util/keyvalue.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rtcm/errors.hpp"

namespace rtcm::util {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
    }
    return true;
}

std::vector<std::string> split_commas(const std::string& value) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(value);
    while (std::getline(in, cur, ',')) parts.push_back(trim(cur));
    return parts;
}

}  // namespace

KeyValues parse_key_values(std::string_view text, const std::string& source) {
    KeyValues out;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + ": key '" + key + "' repeated");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

KeyValues read_key_value_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_key_values(text.str(), path.string());
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + text + "' is not key=value");
    std::string key = trim(std::string_view(text).substr(0, eq));
    if (!valid_key(key)) throw ConfigError("override '" + text + "' has an invalid key");
    return {key, trim(std::string_view(text).substr(eq + 1))};
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || value.empty() || !std::isfinite(out)) {
        throw ConfigError(key + ": '" + value + "' is not a finite number");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || value.empty()) {
        throw ConfigError(key + ": '" + value + "' is not a nonnegative integer");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": '" + value + "' is not true or false");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    if (trim(value).empty()) return out;
    for (const auto& part : split_commas(value)) out.push_back(parse_double(key, part));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    if (trim(value).empty()) return out;
    for (const auto& part : split_commas(value)) out.push_back(parse_u64(key, part));
    return out;
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string format_double_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
    return out;
}

std::string format_size_list(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
    return out;
}

void ConfigSchema::add(std::string key, std::string help, Setter set, Getter get) {
    entries_.push_back({std::move(key), std::move(help), std::move(set), std::move(get)});
}

bool ConfigSchema::has(const std::string& key) const {
    for (const auto& e : entries_) {
        if (e.key == key) return true;
    }
    return false;
}

void ConfigSchema::apply(const KeyValues& values) const {
    for (const auto& [key, value] : values) {
        const Entry* hit = nullptr;
        for (const auto& e : entries_) {
            if (e.key == key) hit = &e;
        }
        if (!hit) throw ConfigError("unknown config key '" + key + "'");
        hit->set(value);
    }
}

std::string ConfigSchema::print() const {
    std::string out;
    for (const auto& e : entries_) out += e.key + " = " + e.get() + "\n";
    return out;
}

std::string ConfigSchema::describe() const {
    std::size_t width = 0;
    for (const auto& e : entries_) width = std::max(width, e.key.size());
    std::string out;
    for (const auto& e : entries_) out += "  " + e.key + std::string(width - e.key.size() + 2, ' ') + e.help + "\n";
    return out;
}

}  // namespace rtcm::util
