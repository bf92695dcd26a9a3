#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "impactkam/forcing.hpp"

namespace impactkam {

/// Parsed run configuration.  The on-disk format is plain text, one dotted
/// `key = value` assignment per line, `#` starting a comment.  Keys are
/// validated against the schema at parse time (unknown keys are rejected
/// with the offending line number); required keys are enforced per command.
class RunConfig {
public:
    static RunConfig parse_file(const std::string& path);
    static RunConfig parse_string(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const;

    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int_or(const std::string& key, long fallback) const;
    std::uint64_t get_uint64_or(const std::string& key, std::uint64_t fallback) const;
    std::string get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_double_list_or(const std::string& key) const;

    /// Frequency values accept either a number or the literal "golden"
    /// (2 pi times the golden mean).
    double get_frequency_or(const std::string& key, double fallback) const;

    void require(const std::vector<std::string>& keys) const;

    /// Line-numbered failure for semantic errors discovered after parsing.
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    /// FNV-1a hash of the canonical key=value listing (plus overrides
    /// recorded through note_override), hex encoded.
    std::string hash() const;

    /// Record a CLI override that affects the numerical payload.
    void note_override(const std::string& key, const std::string& value);

    ForcingSpec make_forcing() const;

    const std::string& origin() const { return origin_; }

private:
    struct Entry {
        std::string raw;
        int line = 0;
    };
    std::string origin_;
    std::map<std::string, Entry> entries_;
};

}  // namespace impactkam
