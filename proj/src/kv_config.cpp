#include "fidreg/kv_config.hpp"

#include <fstream>
#include <sstream>

#include "fidreg/error.hpp"
#include "fidreg/format.hpp"

namespace fidreg {

namespace {

std::vector<std::string_view> split_commas(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(',', start);
        parts.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return parts;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError("expected 'key = value', got '" + std::string(line) + "'", line_no);
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw FormatError("empty key", line_no);
        }
        if (!kv.entries_.emplace(key, Entry{value, line_no}).second) {
            throw FormatError("duplicate key '" + key + "'", line_no);
        }
    }
    return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    } catch (const FormatError& e) {
        throw e.with_context(path.string());
    }
}

bool KeyValues::has(const std::string& key) const { return entries_.count(key) != 0; }

const KeyValues::Entry* KeyValues::find(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return nullptr;
    }
    consumed_.insert(key);
    return &it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) {
    const Entry* e = find(key);
    if (e == nullptr) {
        return fallback;
    }
    const auto v = parse_double(e->value);
    if (!v) {
        throw FormatError("'" + key + "' is not a number: '" + e->value + "'", e->line);
    }
    return *v;
}

double KeyValues::require_double(const std::string& key) {
    if (!has(key)) {
        throw ConfigError("missing required key '" + key + "'");
    }
    return get_double(key, 0.0);
}

long long KeyValues::get_int(const std::string& key, long long fallback) {
    const Entry* e = find(key);
    if (e == nullptr) {
        return fallback;
    }
    const auto v = parse_int(e->value);
    if (!v) {
        throw FormatError("'" + key + "' is not an integer: '" + e->value + "'", e->line);
    }
    return *v;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) {
    const Entry* e = find(key);
    if (e == nullptr) {
        return fallback;
    }
    if (e->value == "true" || e->value == "1") {
        return true;
    }
    if (e->value == "false" || e->value == "0") {
        return false;
    }
    throw FormatError("'" + key + "' is not a boolean: '" + e->value + "'", e->line);
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) {
    const Entry* e = find(key);
    return e == nullptr ? fallback : e->value;
}

std::vector<double> KeyValues::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) {
    const Entry* e = find(key);
    if (e == nullptr) {
        return fallback;
    }
    std::vector<double> out;
    for (auto part : split_commas(e->value)) {
        const auto v = parse_double(part);
        if (!v) {
            throw FormatError("'" + key + "' has a non-numeric entry: '" + std::string(part) + "'",
                              e->line);
        }
        out.push_back(*v);
    }
    return out;
}

std::vector<long long> KeyValues::get_int_list(const std::string& key,
                                               const std::vector<long long>& fallback) {
    const Entry* e = find(key);
    if (e == nullptr) {
        return fallback;
    }
    std::vector<long long> out;
    for (auto part : split_commas(e->value)) {
        const auto v = parse_int(part);
        if (!v) {
            throw FormatError("'" + key + "' has a non-integer entry: '" + std::string(part) + "'",
                              e->line);
        }
        out.push_back(*v);
    }
    return out;
}

std::vector<std::string> KeyValues::get_string_list(const std::string& key,
                                                    const std::vector<std::string>& fallback) {
    const Entry* e = find(key);
    if (e == nullptr) {
        return fallback;
    }
    std::vector<std::string> out;
    for (auto part : split_commas(e->value)) {
        out.emplace_back(part);
    }
    return out;
}

void KeyValues::ensure_all_consumed() const {
    for (const auto& [key, entry] : entries_) {
        if (consumed_.count(key) == 0) {
            throw FormatError("unknown key '" + key + "'", entry.line);
        }
    }
}

}  // namespace fidreg
