#include "penning/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "penning/errors.hpp"

namespace penning {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " has no '='");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

double Config::get_double(const std::string& key, double def) const {
    auto it = values_.find(key);
    double v = def;
    if (it != values_.end()) {
        try {
            v = std::stod(it->second);
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "' is not a number: " + it->second);
        }
    }
    std::ostringstream os;
    os.precision(17);
    os << v;
    resolved_[key] = os.str();
    return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t def) const {
    auto it = values_.find(key);
    std::int64_t v = def;
    if (it != values_.end()) {
        try {
            v = std::stoll(it->second);
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "' is not an integer: " + it->second);
        }
    }
    resolved_[key] = std::to_string(v);
    return v;
}

bool Config::get_bool(const std::string& key, bool def) const {
    auto it = values_.find(key);
    bool v = def;
    if (it != values_.end()) {
        std::string s = it->second;
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (s == "true" || s == "1" || s == "yes" || s == "on") v = true;
        else if (s == "false" || s == "0" || s == "no" || s == "off") v = false;
        else throw ConfigError("key '" + key + "' is not a boolean: " + it->second);
    }
    resolved_[key] = v ? "true" : "false";
    return v;
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
    auto it = values_.find(key);
    const std::string v = (it != values_.end()) ? it->second : def;
    resolved_[key] = v;
    return v;
}

double Config::require_double(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required config key: " + key);
    return get_double(key, 0.0);
}

std::string Config::require_string(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required config key: " + key);
    return get_string(key, "");
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!resolved_.count(k)) out.push_back(k);
    return out;
}

} // namespace penning
