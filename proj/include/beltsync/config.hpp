#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "beltsync/errors.hpp"

// Flat key-value scenario configuration with [section] headers. '#' and ';'
// start comments; list values are whitespace-separated numbers.
namespace beltsync::cli {

class ConfigDoc {
  public:
    static ConfigDoc parse(const std::string& text) {
        ConfigDoc doc;
        doc.raw_ = text;
        std::istringstream in(text);
        std::string line;
        std::string section; // "" = top level
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw config_error("config line " + std::to_string(lineno) +
                                       ": unterminated section header");
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                doc.sections_[section]; // make the section visible even if empty
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) +
                                   ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw config_error("config line " + std::to_string(lineno) + ": empty key");
            doc.sections_[section][key] = value;
        }
        return doc;
    }

    static ConfigDoc load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw config_error("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    const std::string& raw() const { return raw_; }

    bool has_section(const std::string& section) const {
        return sections_.count(section) != 0;
    }

    bool has(const std::string& section, const std::string& key) const {
        const auto it = sections_.find(section);
        return it != sections_.end() && it->second.count(key) != 0;
    }

    std::string require_string(const std::string& section, const std::string& key) const {
        const auto it = sections_.find(section);
        if (it == sections_.end() || !it->second.count(key))
            throw config_error("missing required field [" + section + "] " + key);
        return it->second.at(key);
    }

    double require_double(const std::string& section, const std::string& key) const {
        return to_double(section, key, require_string(section, key));
    }

    double get_double(const std::string& section, const std::string& key,
                      double fallback) const {
        if (!has(section, key)) return fallback;
        return to_double(section, key, sections_.at(section).at(key));
    }

    std::optional<double> maybe_double(const std::string& section,
                                       const std::string& key) const {
        if (!has(section, key)) return std::nullopt;
        return to_double(section, key, sections_.at(section).at(key));
    }

    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = sections_.at(section).at(key);
        try {
            if (!v.empty() && v.front() == '-') throw std::invalid_argument("negative");
            std::size_t pos = 0;
            const std::uint64_t out = std::stoull(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing characters");
            return out;
        } catch (const std::exception&) {
            throw config_error("field [" + section + "] " + key +
                               ": expected unsigned integer, got '" + v + "'");
        }
    }

    std::uint64_t require_u64(const std::string& section, const std::string& key) const {
        require_string(section, key);
        return get_u64(section, key, 0);
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = sections_.at(section).at(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw config_error("field [" + section + "] " + key + ": expected boolean, got '" +
                           v + "'");
    }

    std::vector<double> get_list(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        if (!has(section, key)) return out;
        std::istringstream ss(sections_.at(section).at(key));
        std::string tok;
        while (ss >> tok) out.push_back(to_double(section, key, tok));
        return out;
    }

    void require_section(const std::string& section, const std::string& why) const {
        if (!has_section(section))
            throw config_error("missing required section [" + section + "] (" + why + ")");
    }

  private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static double to_double(const std::string& section, const std::string& key,
                            const std::string& v) {
        try {
            std::size_t pos = 0;
            const double out = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing characters");
            return out;
        } catch (const std::exception&) {
            throw config_error("field [" + section + "] " + key + ": expected number, got '" +
                               v + "'");
        }
    }

    std::string raw_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

// FNV-1a over the raw config bytes; stamped into every output artifact.
inline std::uint64_t config_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace beltsync::cli
