#include "molqca/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "molqca/errors.hpp"

namespace molqca {

namespace {

struct Entry {
    int line;
    std::string key;
    std::string value;
};

const std::set<std::string, std::less<>> list_keys{"lambda", "t_s", "t_d", "k_t"};

const std::set<std::string, std::less<>> scalar_keys{
    "experiment", "gamma",   "t_s_min",  "t_s_max", "t_s_per_decade", "delta_min",     "delta_max",
    "delta_amp",  "t_hold",  "n_starts", "seed",    "delta_points",   "dt_max",        "rel_tol",
    "abs_tol",    "record_stride", "output", "out_dir", "workers",     "trajectories",
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view k) {
    return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

double to_double(const Entry& e, bool allow_inf = false) {
    if (allow_inf && (e.value == "inf" || e.value == "infinity")) {
        return units::infinite_time;
    }
    double v = 0.0;
    const char* end = e.value.data() + e.value.size();
    const auto res = std::from_chars(e.value.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        throw ConfigError(ConfigErrorKind::type, e.line, e.key, "expected a finite number, got '" + e.value + "'");
    }
    return v;
}

template <class Int>
Int to_integer(const Entry& e) {
    Int v{};
    const char* end = e.value.data() + e.value.size();
    const auto res = std::from_chars(e.value.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw ConfigError(ConfigErrorKind::type, e.line, e.key, "expected an integer, got '" + e.value + "'");
    }
    return v;
}

bool to_bool(const Entry& e) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ConfigError(ConfigErrorKind::type, e.line, e.key, "expected true or false, got '" + e.value + "'");
}

void check(bool ok, const Entry& e, const std::string& rule) {
    if (!ok) {
        throw ConfigError(ConfigErrorKind::range, e.line, e.key, "value " + e.value + " out of range: " + rule);
    }
}

double positive(const Entry& e) {
    const double v = to_double(e);
    check(v > 0.0, e, "must be > 0");
    return v;
}

double non_negative(const Entry& e) {
    const double v = to_double(e);
    check(v >= 0.0, e, "must be >= 0");
    return v;
}

template <class Int>
Int at_least(const Entry& e, Int lo) {
    const Int v = to_integer<Int>(e);
    check(v >= lo, e, "must be >= " + std::to_string(lo));
    return v;
}

std::vector<Entry> tokenize(std::string_view text) {
    std::vector<Entry> entries;
    std::map<std::string, int, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(ConfigErrorKind::syntax, line_no, "", "expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (!valid_key(key)) {
            throw ConfigError(ConfigErrorKind::syntax, line_no, key, "malformed key");
        }
        if (value.empty()) {
            throw ConfigError(ConfigErrorKind::syntax, line_no, key, "missing value");
        }
        const bool is_list = list_keys.contains(key);
        if (!is_list && !scalar_keys.contains(key)) {
            throw ConfigError(ConfigErrorKind::unknown_key, line_no, key, "unknown key");
        }
        if (!is_list) {
            if (auto it = seen.find(key); it != seen.end()) {
                throw ConfigError(ConfigErrorKind::duplicate_key, line_no, key,
                                  "already set on line " + std::to_string(it->second));
            }
            seen.emplace(key, line_no);
        }
        entries.push_back({line_no, key, value});
    }
    return entries;
}

void apply(RunConfig& cfg, const Entry& e, std::set<std::string, std::less<>>& lists_started) {
    ExperimentSpec& s = cfg.spec;
    const std::string& k = e.key;

    if (list_keys.contains(k)) {
        std::vector<double>& list = k == "lambda" ? s.lambda : k == "t_s" ? s.t_s : k == "t_d" ? s.t_d : s.k_t;
        if (lists_started.insert(k).second) list.clear();
        if (k == "lambda" || k == "k_t") {
            list.push_back(non_negative(e));
        } else if (k == "t_d") {
            const double v = to_double(e, true);
            check(v > 0.0, e, "must be > 0 or inf");
            list.push_back(v);
        } else {
            list.push_back(positive(e));
        }
        return;
    }

    if (k == "experiment") return;
    if (k == "gamma") s.gamma = positive(e);
    else if (k == "t_s_min") s.t_s_min = positive(e);
    else if (k == "t_s_max") s.t_s_max = positive(e);
    else if (k == "t_s_per_decade") s.t_s_per_decade = at_least<int>(e, 1);
    else if (k == "delta_min") s.delta_min = to_double(e);
    else if (k == "delta_max") s.delta_max = to_double(e);
    else if (k == "delta_amp") s.delta_amp = non_negative(e);
    else if (k == "t_hold") s.t_hold = non_negative(e);
    else if (k == "n_starts") s.n_starts = at_least<int>(e, 1);
    else if (k == "seed") s.seed = to_integer<std::uint64_t>(e);
    else if (k == "delta_points") s.delta_points = at_least<int>(e, 2);
    else if (k == "dt_max") s.integrator.dt_max = positive(e);
    else if (k == "rel_tol") s.integrator.rel_tol = positive(e);
    else if (k == "abs_tol") s.integrator.abs_tol = positive(e);
    else if (k == "record_stride") s.integrator.record_stride = at_least<std::size_t>(e, 1);
    else if (k == "output") s.output = e.value;
    else if (k == "out_dir") cfg.out_dir = e.value;
    else if (k == "workers") cfg.workers = at_least<unsigned>(e, 1);
    else if (k == "trajectories") s.trajectories = to_bool(e);
}

const Entry* find(const std::vector<Entry>& entries, std::string_view key) {
    for (const Entry& e : entries) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

} // namespace

std::string_view to_string(ConfigErrorKind kind) noexcept {
    switch (kind) {
    case ConfigErrorKind::syntax: return "syntax";
    case ConfigErrorKind::unknown_key: return "unknown_key";
    case ConfigErrorKind::duplicate_key: return "duplicate_key";
    case ConfigErrorKind::range: return "range";
    case ConfigErrorKind::type: return "type";
    case ConfigErrorKind::io: return "io";
    }
    return "unknown";
}

namespace {

std::string format_error(ConfigErrorKind kind, int line, const std::string& field, const std::string& message) {
    std::ostringstream out;
    out << "config";
    if (line > 0) out << ":" << line;
    out << ": " << to_string(kind) << " error";
    if (!field.empty()) out << " in '" << field << "'";
    out << ": " << message;
    return out.str();
}

} // namespace

ConfigError::ConfigError(ConfigErrorKind kind, int line, std::string field, const std::string& message)
    : std::runtime_error(format_error(kind, line, field, message)), kind_(kind), line_(line),
      field_(std::move(field)), detail_(message) {}

std::optional<ExperimentKind> experiment_from_name(std::string_view name) noexcept {
    if (name == "steady") return ExperimentKind::steady_curve;
    if (name == "excess") return ExperimentKind::excess_isolated;
    if (name == "dissipation") return ExperimentKind::dissipation_sweep;
    return parse_experiment_kind(name);
}

RunConfig parse_config(std::string_view text, std::optional<ExperimentKind> fallback) {
    const std::vector<Entry> entries = tokenize(text);

    std::optional<ExperimentKind> kind = fallback;
    if (const Entry* e = find(entries, "experiment")) {
        const auto named = experiment_from_name(e->value);
        if (!named) {
            throw ConfigError(ConfigErrorKind::range, e->line, e->key, "unknown experiment '" + e->value + "'");
        }
        if (fallback && *fallback != *named) {
            throw ConfigError(ConfigErrorKind::range, e->line, e->key,
                              "config is for '" + e->value + "' but '" + std::string(to_string(*fallback)) +
                                  "' was requested");
        }
        kind = named;
    }

    RunConfig cfg;
    cfg.spec = default_spec(kind.value_or(ExperimentKind::hysteresis));
    std::set<std::string, std::less<>> lists_started;
    for (const Entry& e : entries) apply(cfg, e, lists_started);

    const ExperimentSpec& s = cfg.spec;
    if (!(s.delta_min < s.delta_max)) {
        const Entry* e = find(entries, "delta_max");
        throw ConfigError(ConfigErrorKind::range, e ? e->line : 0, "delta_max", "must be greater than delta_min");
    }
    if (s.t_s_max < s.t_s_min) {
        const Entry* e = find(entries, "t_s_max");
        throw ConfigError(ConfigErrorKind::range, e ? e->line : 0, "t_s_max", "must be >= t_s_min");
    }
    try {
        s.validate();
    } catch (const DomainError& err) {
        throw ConfigError(ConfigErrorKind::range, 0, "", err.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path, std::optional<ExperimentKind> fallback) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(ConfigErrorKind::io, 0, "", "cannot read " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str(), fallback);
    } catch (const ConfigError& e) {
        throw ConfigError(e.kind(), e.line(), e.field(), e.detail() + " (" + path + ")");
    }
}

std::string serialize_config(const RunConfig& config) {
    const ExperimentSpec& s = config.spec;
    std::ostringstream out;
    auto num = [](double v) { return std::isinf(v) ? std::string("inf") : csv::format_double(v); };
    out << "experiment = " << to_string(s.kind) << '\n';
    out << "gamma = " << num(s.gamma) << '\n';
    for (double v : s.lambda) out << "lambda = " << num(v) << '\n';
    for (double v : s.t_s) out << "t_s = " << num(v) << '\n';
    for (double v : s.t_d) out << "t_d = " << num(v) << '\n';
    for (double v : s.k_t) out << "k_t = " << num(v) << '\n';
    out << "t_s_min = " << num(s.t_s_min) << '\n';
    out << "t_s_max = " << num(s.t_s_max) << '\n';
    out << "t_s_per_decade = " << s.t_s_per_decade << '\n';
    out << "delta_min = " << num(s.delta_min) << '\n';
    out << "delta_max = " << num(s.delta_max) << '\n';
    out << "delta_amp = " << num(s.delta_amp) << '\n';
    if (s.t_hold) out << "t_hold = " << num(*s.t_hold) << '\n';
    out << "n_starts = " << s.n_starts << '\n';
    out << "seed = " << s.seed << '\n';
    out << "delta_points = " << s.delta_points << '\n';
    if (s.integrator.dt_max) out << "dt_max = " << num(*s.integrator.dt_max) << '\n';
    if (s.integrator.rel_tol) out << "rel_tol = " << num(*s.integrator.rel_tol) << '\n';
    if (s.integrator.abs_tol) out << "abs_tol = " << num(*s.integrator.abs_tol) << '\n';
    if (s.integrator.record_stride) out << "record_stride = " << *s.integrator.record_stride << '\n';
    out << "trajectories = " << (s.trajectories ? "true" : "false") << '\n';
    if (!s.output.empty()) out << "output = " << s.output << '\n';
    out << "out_dir = " << config.out_dir << '\n';
    out << "workers = " << config.workers << '\n';
    return out.str();
}

} // namespace molqca
