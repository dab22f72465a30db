#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace penning {

// Flat-keyed text configuration: one "section.key = value" per line, '#'
// comments. Every lookup (whether satisfied from the file or from the
// supplied default) is recorded with its resolved value, so a run can echo
// the complete effective configuration into its manifest.
class Config {
  public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;

    double get_double(const std::string& key, double def) const;
    std::int64_t get_int(const std::string& key, std::int64_t def) const;
    bool get_bool(const std::string& key, bool def) const;
    std::string get_string(const std::string& key, const std::string& def) const;

    // Required variants: throw ConfigError when the key is missing.
    double require_double(const std::string& key) const;
    std::string require_string(const std::string& key) const;

    /// Every key consumed so far with its resolved value, sorted by key.
    const std::map<std::string, std::string>& resolved() const { return resolved_; }

    /// Keys present in the file but never consumed (typo guard).
    std::vector<std::string> unused_keys() const;

  private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
};

} // namespace penning
