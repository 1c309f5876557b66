#pragma once

#include "epicurve/curves.hpp"
#include "epicurve/distributions.hpp"
#include "epicurve/errors.hpp"
#include "epicurve/models.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epicurve {

/// Malformed configuration; carries the offending field and its line when known.
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& source, int line, const std::string& field, const std::string& message);
    int line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    int line_;
    std::string field_;
};

/// "exponential(1)", "gamma(2, 1)", "uniform(0, 2)", "point(1)", "defective(0.8, exponential(1))".
TimeDistribution parse_time_distribution(const std::string& text);
/// "poisson(2)", "geometric(2)", "fixed(3)", "binomial(4, 0.5)".
OffspringLaw parse_offspring(const std::string& text);

/// Sectioned key = value configuration with [model], [run] and [output].
class RunConfig {
public:
    static RunConfig parse(const std::string& text, const std::string& source = "<config>");
    static RunConfig load(const std::string& path);

    const ModelSpec& model() const { return *model_; }
    std::uint64_t seed() const { return seed_; }
    const std::string& text() const { return text_; }
    const std::string& source() const { return source_; }

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<long> get_longs(const std::string& section, const std::string& key, std::vector<long> fallback) const;

    Grid grid() const;
    std::string output_directory() const { return get_string("output", "directory", "."); }

    void override_seed(std::uint64_t seed) { seed_ = seed; }
    void override_value(const std::string& section, const std::string& key, const std::string& value);

    /// Raises a ConfigError pointing at the field.
    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& message) const;

private:
    struct Entry {
        std::string value;
        int line;
    };
    const Entry* find(const std::string& section, const std::string& key) const;
    const Entry& require(const std::string& section, const std::string& key) const;
    ModelSpec build_model() const;

    std::string text_;
    std::string source_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::optional<ModelSpec> model_;
    std::uint64_t seed_ = 0;
};

} // namespace epicurve
