#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdlab/grid.hpp"
#include "rdlab/noise.hpp"

namespace rdlab {

/// deterministic double formatting for data files
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Flat key-value configuration with dotted section keys. Unknown keys are
/// errors: every key must be registered by the consumer before validate().
class KeyValueConfig {
  public:
    static KeyValueConfig parse(const std::string& text) {
        KeyValueConfig cfg;
        cfg.raw_ = text;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                if (a == std::string::npos) return std::string();
                const auto b = s.find_last_not_of(" \t\r");
                return s.substr(a, b - a + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw configuration_error("config line " + std::to_string(lineno) +
                                          ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw configuration_error("config line " + std::to_string(lineno) +
                                          ": empty key");
            if (cfg.values_.count(key))
                throw configuration_error("config: duplicate key '" + key + "'");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw configuration_error("config: cannot open " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        known_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) {
        known_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_double(key, it->second);
    }
    long get_int(const std::string& key, long fallback) {
        known_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stol(it->second);
        } catch (...) {
            throw configuration_error("config: key '" + key + "' is not an integer");
        }
    }
    bool get_bool(const std::string& key, bool fallback) {
        known_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw configuration_error("config: key '" + key + "' is not a boolean");
    }
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) {
        known_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(parse_double(key, tok));
        return out;
    }

    /// every present key must have been consumed by a getter
    void reject_unknown_keys() const {
        for (const auto& [k, v] : values_)
            if (!known_.count(k))
                throw configuration_error("config: unknown key '" + k + "'");
    }

    const std::string& raw_text() const { return raw_; }

  private:
    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return d;
        } catch (...) {
            throw configuration_error("config: key '" + key + "' is not a number");
        }
    }

    std::string raw_;
    std::map<std::string, std::string> values_;
    std::set<std::string> known_;
};

/// CSV writer with deterministic formatting.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string());
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
        ncols_ = columns.size();
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != ncols_) throw std::logic_error("CsvWriter: column mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

  private:
    std::ofstream out_;
    std::size_t ncols_ = 0;
};

/// flat binary snapshot: header (magic, dim, n, frame count), times, then
/// frames as little-endian doubles in lexicographic site order
inline void write_field_path(const std::filesystem::path& path, const FieldPath& fp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    const char magic[8] = {'R', 'D', 'F', 'P', '0', '0', '0', '1'};
    out.write(magic, 8);
    const Grid& g = fp.frames.front().grid;
    const std::uint32_t dim = g.dim, n = g.n;
    const std::uint64_t frames = fp.size();
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&frames), 8);
    out.write(reinterpret_cast<const char*>(fp.times.data()),
              static_cast<std::streamsize>(8 * fp.times.size()));
    for (const Field& f : fp.frames)
        out.write(reinterpret_cast<const char*>(f.values.data()),
                  static_cast<std::streamsize>(8 * f.values.size()));
}

inline FieldPath read_field_path(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (std::string(magic, 8) != "RDFP0001")
        throw std::runtime_error("bad snapshot magic in " + path.string());
    std::uint32_t dim = 0, n = 0;
    std::uint64_t frames = 0;
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&frames), 8);
    Grid g(static_cast<int>(dim), static_cast<int>(n));
    std::vector<double> times(frames);
    in.read(reinterpret_cast<char*>(times.data()), static_cast<std::streamsize>(8 * frames));
    FieldPath fp;
    for (std::uint64_t f = 0; f < frames; ++f) {
        Field fr(g);
        in.read(reinterpret_cast<char*>(fr.values.data()),
                static_cast<std::streamsize>(8 * fr.values.size()));
        fp.push(times[f], std::move(fr));
    }
    if (!in) throw std::runtime_error("truncated snapshot " + path.string());
    return fp;
}

} // namespace rdlab
