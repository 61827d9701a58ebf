#pragma once

// Minimal `key = value` config files: one pair per line, '#' starts a
// comment, keys are unique. Used for scenario specs and manifests.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "transmc/error.hpp"

namespace transmc {

class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in) {
        KeyValueFile kv;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
            std::string key = trim(body.substr(0, eq));
            std::string value = trim(body.substr(eq + 1));
            if (key.empty()) throw ParseError("empty key", lineno);
            if (kv.entries_.count(key)) throw ParseError("duplicate key '" + key + "'", lineno);
            kv.lines_[key] = lineno;
            kv.order_.push_back(key);
            kv.entries_.emplace(std::move(key), std::move(value));
        }
        return kv;
    }

    static KeyValueFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open '" + path + "'");
        return parse(in);
    }

    void set(const std::string& key, const std::string& value) {
        if (!entries_.count(key)) order_.push_back(key);
        entries_[key] = value;
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const std::string& get(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ParseError("missing key '" + key + "'", 0);
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return to_double(get(key), key); }
    double get_double_or(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }
    std::int64_t get_int(const std::string& key) const { return to_int(get(key), key); }
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
        return has(key) ? get_int(key) : fallback;
    }
    std::uint64_t get_u64(const std::string& key) const {
        const std::string& s = get(key);
        std::uint64_t out = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc() || p != s.data() + s.size()) throw bad_value(key);
        return out;
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        const std::string& s = get(key);
        if (trim(s).empty()) return out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(trim(item));
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : get_list(key)) out.push_back(to_double(s, key));
        return out;
    }

    void write(std::ostream& out) const {
        for (const auto& k : order_) out << k << " = " << entries_.at(k) << '\n';
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write '" + path + "'");
        write(out);
    }

    static std::string format(double x) {
        std::ostringstream os;
        os.precision(17);
        os << x;
        return os.str();
    }

    static std::string join(const std::vector<double>& xs) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) s += ", ";
            s += format(xs[i]);
        }
        return s;
    }

    static std::string trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return std::string(s.substr(b, e - b + 1));
    }

private:
    ParseError bad_value(const std::string& key) const {
        auto it = lines_.find(key);
        return ParseError("invalid value for '" + key + "'", it == lines_.end() ? 0 : it->second);
    }

    double to_double(const std::string& s, const std::string& key) const {
        try {
            std::size_t used = 0;
            const double x = std::stod(s, &used);
            if (used != s.size()) throw bad_value(key);
            return x;
        } catch (const std::logic_error&) {
            throw bad_value(key);
        }
    }

    std::int64_t to_int(const std::string& s, const std::string& key) const {
        std::int64_t out = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc() || p != s.data() + s.size()) throw bad_value(key);
        return out;
    }

    std::map<std::string, std::string> entries_;
    std::map<std::string, std::size_t> lines_;
    std::vector<std::string> order_;
};

}  // namespace transmc
