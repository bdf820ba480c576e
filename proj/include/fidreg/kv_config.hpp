#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fidreg {

// Flat `key = value` text block. `#` starts a comment; blank lines are ignored.
// Keys must be unique. Every accessor marks the key as consumed so that
// callers can reject unknown keys with ensure_all_consumed().
class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    double get_double(const std::string& key, double fallback);
    double require_double(const std::string& key);
    long long get_int(const std::string& key, long long fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::string get_string(const std::string& key, const std::string& fallback);
    // Comma-separated lists; a scalar value yields a one-element list.
    std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback);
    std::vector<long long> get_int_list(const std::string& key, const std::vector<long long>& fallback);
    std::vector<std::string> get_string_list(const std::string& key,
                                             const std::vector<std::string>& fallback);

    void ensure_all_consumed() const;

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    const Entry* find(const std::string& key);

    std::map<std::string, Entry> entries_;
    std::set<std::string> consumed_;
};

}  // namespace fidreg
