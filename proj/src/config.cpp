#include "impactkam/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "impactkam/errors.hpp"
#include "impactkam/linalg.hpp"

namespace impactkam {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "experiment",
        "epsilon",
        "seed",
        "forcing.a0",
        "forcing.a",
        "forcing.b",
        "forcing.rho",
        "simulate.t0",
        "simulate.y0",
        "simulate.n_impacts",
        "impact_map.t_count",
        "impact_map.y_min",
        "impact_map.y_max",
        "impact_map.y_count",
        "curve.omega0",
        "curve.k",
        "curve.order",
        "curve.tol",
        "curve.max_iter",
        "curve.nu",
        "curve.q_max",
        "ladder.k_min",
        "ladder.k_max",
        "confine.k_inner",
        "confine.n_trials",
        "confine.n_impacts",
        "confine.control",
        "confine.control_epsilon",
        "audit.t_count",
        "audit.y_min",
        "audit.y_max",
        "audit.y_count",
        "audit.n_quad",
        "audit.E0",
        // CLI overrides folded into the hash
        "cli.seed",
    };
    return keys;
}

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double golden_omega() { return kTwoPi * 0.61803398874989484820458683436564; }

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

RunConfig RunConfig::parse_string(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (!known_keys().count(key))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
        if (cfg.entries_.count(key))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        cfg.entries_[key] = {value, line_no};
    }
    return cfg;
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

void RunConfig::fail(const std::string& key, const std::string& message) const {
    auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": key '" + key + "': " + message);
}

double RunConfig::get_double(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    try {
        size_t pos = 0;
        const double v = std::stod(it->second.raw, &pos);
        if (pos != it->second.raw.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        fail(key, "expected a number, got '" + it->second.raw + "'");
    }
}

double RunConfig::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long RunConfig::get_int(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    try {
        size_t pos = 0;
        const long v = std::stol(it->second.raw, &pos);
        if (pos != it->second.raw.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        fail(key, "expected an integer, got '" + it->second.raw + "'");
    }
}

long RunConfig::get_int_or(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t RunConfig::get_uint64_or(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    auto it = entries_.find(key);
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(it->second.raw, &pos);
        if (pos != it->second.raw.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        fail(key, "expected an unsigned integer, got '" + it->second.raw + "'");
    }
}

std::string RunConfig::get_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second.raw;
}

std::string RunConfig::get_string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

std::vector<double> RunConfig::get_double_list_or(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    std::istringstream in(entries_.at(key).raw);
    std::string tok;
    while (in >> tok) {
        try {
            size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            fail(key, "expected a list of numbers, got token '" + tok + "'");
        }
    }
    return out;
}

double RunConfig::get_frequency_or(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string raw = entries_.at(key).raw;
    if (raw == "golden") return golden_omega();
    return get_double(key);
}

void RunConfig::require(const std::vector<std::string>& keys) const {
    for (const auto& key : keys)
        if (!has(key)) throw ConfigError(origin_ + ": missing required key '" + key + "'");
}

std::string RunConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [key, entry] : entries_) {
        mix(key);
        mix("=");
        mix(entry.raw);
        mix("\n");
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void RunConfig::note_override(const std::string& key, const std::string& value) {
    entries_[key] = {value, 0};
}

ForcingSpec RunConfig::make_forcing() const {
    const double a0 = get_double_or("forcing.a0", 0.0);
    const auto ak = get_double_list_or("forcing.a");
    const auto bk = get_double_list_or("forcing.b");
    const double rho = get_double_or("forcing.rho", 0.25);
    if (!(rho > 0.0 && rho < 1.0)) fail("forcing.rho", "must lie in (0, 1)");
    return ForcingSpec(a0, ak, bk, rho);
}

}  // namespace impactkam
