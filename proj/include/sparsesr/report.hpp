#pragma once

// Flat key=value run reports and meta files. Lines starting with '#' are comments,
// "[section]" lines prefix the following keys as "section.key".

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sparsesr/error.hpp"

namespace sparsesr {

/// Shortest decimal that round-trips the double; "inf", "-inf" and "nan" spelled out.
inline std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int precision = 6; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

class Report {
public:
    Report& set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries_) {
            if (k == key) {
                v = value;
                return *this;
            }
        }
        entries_.emplace_back(key, value);
        return *this;
    }
    Report& set(const std::string& key, const char* value) { return set(key, std::string(value)); }
    Report& set(const std::string& key, double value) { return set(key, format_value(value)); }
    Report& set(const std::string& key, bool value) { return set(key, std::string(value ? "true" : "false")); }
    template <class Int>
        requires std::is_integral_v<Int>
    Report& set(const std::string& key, Int value) {
        return set(key, std::to_string(value));
    }

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    void write(std::ostream& out) const {
        for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
    }

    [[nodiscard]] std::string str() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) detail::fail(ErrorCode::io, "cannot write " + path.string());
        write(out);
        if (!out) detail::fail(ErrorCode::io, "write failed: " + path.string());
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

inline std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& origin) {
    std::map<std::string, std::string> out;
    std::string line, section;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            detail::fail(ErrorCode::invalid_argument,
                         origin + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        out[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
    }
    return out;
}

inline std::map<std::string, std::string> load_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) detail::fail(ErrorCode::io, "cannot open " + path.string());
    return parse_key_values(in, path.string());
}

} // namespace sparsesr
