#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace deflab {

struct ConfigError : std::runtime_error {
    int line = 0;
    ConfigError(const std::string& msg, int line_) : std::runtime_error(msg), line(line_) {}
};

/// Flat `key = value` text with optional [section] headers; a section prefixes
/// its keys as section.key. '#' starts a comment.
class KeyValueConfig {
  public:
    static KeyValueConfig parse_string(const std::string& text) {
        KeyValueConfig cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']') throw ConfigError("unterminated section header", lineno);
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
            std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty()) throw ConfigError("empty key", lineno);
            if (!section.empty()) key = section + "." + key;
            cfg.kv_[key] = value;
            cfg.lines_[key] = lineno;
        }
        return cfg;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path, 0);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str());
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& def = "") const {
        auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }

    double get_double(const std::string& key, double def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw ConfigError("key '" + key + "': not a number: " + it->second, line_of(key));
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw ConfigError("key '" + key + "': not an integer: " + it->second, line_of(key));
        }
    }

    std::size_t get_size(const std::string& key, std::size_t def) const {
        return static_cast<std::size_t>(get_u64(key, def));
    }

    int line_of(const std::string& key) const {
        auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : kv_) out.push_back(k);
        return out;
    }

  private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> kv_;
    std::map<std::string, int> lines_;
};

} // namespace deflab
