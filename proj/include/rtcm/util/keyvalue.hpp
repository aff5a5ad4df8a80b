#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rtcm::util {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// "key = value" lines; '#' starts a comment, blank lines are skipped.
// Throws ConfigError naming source and line on malformed input or repeated keys.
KeyValues parse_key_values(std::string_view text, const std::string& source = "<config>");
// Throws IoError when the file cannot be read.
KeyValues read_key_value_file(const std::filesystem::path& path);
// "key=value" from the command line.
std::pair<std::string, std::string> parse_override(const std::string& text);

// Strict scalar parsers; throw ConfigError mentioning key.
double parse_double(const std::string& key, const std::string& value);
std::uint64_t parse_u64(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
// Comma-separated reals.
std::vector<double> parse_double_list(const std::string& key, const std::string& value);
std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value);

// Shortest text that reads back to the same double.
std::string format_double(double value);
std::string format_double_list(const std::vector<double>& values);
std::string format_size_list(const std::vector<std::size_t>& values);

// Named settings bound to a config struct. Unknown keys are errors.
class ConfigSchema {
public:
    using Setter = std::function<void(const std::string& value)>;
    using Getter = std::function<std::string()>;

    void add(std::string key, std::string help, Setter set, Getter get);
    void apply(const KeyValues& values) const;
    bool has(const std::string& key) const;

    // Every key with its current value, in registration order; parses back.
    std::string print() const;
    // "  key  help" lines for usage text.
    std::string describe() const;

private:
    struct Entry {
        std::string key, help;
        Setter set;
        Getter get;
    };
    std::vector<Entry> entries_;
};

}  // namespace rtcm::util
