#pragma once

// Run configuration in a flat "key = value" text format.
//
//   # comment
//   experiment = hysteresis
//   lambda = 0        list keys (lambda, t_s, t_d, k_t) may repeat
//   lambda = 10
//   t_d = inf
//
// Any other key may appear at most once.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "molqca/experiments.hpp"

namespace molqca {

struct RunConfig {
    ExperimentSpec spec;
    std::string out_dir = ".";
    unsigned workers = 1;

    bool operator==(const RunConfig&) const = default;
};

enum class ConfigErrorKind { syntax, unknown_key, duplicate_key, range, type, io };

std::string_view to_string(ConfigErrorKind kind) noexcept;

class ConfigError : public std::runtime_error {
public:
    /// line is 1-based; 0 for errors not tied to one line.
    ConfigError(ConfigErrorKind kind, int line, std::string field, const std::string& message);

    ConfigErrorKind kind() const noexcept { return kind_; }
    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }
    /// The message without the location prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ConfigErrorKind kind_;
    int line_;
    std::string field_;
    std::string detail_;
};

/// Accepts "hysteresis", "memory", "steady", "steady_curve", "excess",
/// "excess_isolated", "dissipation" and "dissipation_sweep".
std::optional<ExperimentKind> experiment_from_name(std::string_view name) noexcept;

/// Parses and validates. Unset fields take default_spec() values for the
/// experiment named in the text, else for `fallback`. If both are given they
/// must agree.
RunConfig parse_config(std::string_view text, std::optional<ExperimentKind> fallback = std::nullopt);

/// Reads and parses a file; unreadable files raise ConfigError of kind io.
RunConfig load_config(const std::string& path, std::optional<ExperimentKind> fallback = std::nullopt);

/// Text that parse_config maps back to an equal RunConfig.
std::string serialize_config(const RunConfig& config);

} // namespace molqca
