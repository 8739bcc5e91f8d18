#pragma once

// Parameterized switching experiments. Each run_* function expands its spec
// into a grid of independent work items, executes them on a fixed-size worker
// pool and returns results in grid order.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molqca/csv.hpp"
#include "molqca/dynamics.hpp"
#include "molqca/energetics.hpp"
#include "molqca/qmodel.hpp"

namespace molqca {

enum class ExperimentKind { hysteresis, memory, steady_curve, excess_isolated, dissipation_sweep };

std::string_view to_string(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) noexcept;

struct IntegratorOverrides {
    std::optional<double> dt_max;
    std::optional<double> rel_tol;
    std::optional<double> abs_tol;
    std::optional<std::size_t> record_stride;

    bool operator==(const IntegratorOverrides&) const = default;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::hysteresis;
    double gamma = 1.0;
    std::vector<double> lambda{0.0, 5.0, 10.0};
    std::vector<double> t_s{1000.0};
    std::vector<double> t_d{10.0};
    std::vector<double> k_t{1.0};

    double delta_min = -25.0;
    double delta_max = 25.0;
    double delta_amp = 25.0;           ///< memory write amplitude
    std::optional<double> t_hold;      ///< default 10 T_d (0 for isolated runs)

    /// Log-spaced T_s grid used by dissipation_sweep and excess_isolated when t_s is empty.
    double t_s_min = 10.0;
    double t_s_max = 1e5;
    int t_s_per_decade = 40;

    int n_starts = 100;
    std::uint64_t seed = 0;
    int delta_points = 201;            ///< steady_curve grid size
    IntegratorOverrides integrator;
    bool trajectories = true;          ///< emit per-sample rows for hysteresis and memory
    std::string output;                ///< file name override inside the output directory

    /// Throws DomainError naming the offending field.
    void validate() const;
    bool operator==(const ExperimentSpec&) const = default;
};

/// Default parameters for each kind.
ExperimentSpec default_spec(ExperimentKind kind);

/// t_s list, or the log grid from t_s_min to t_s_max when the list is empty.
std::vector<double> switching_times(const ExperimentSpec& spec);

/// Log-spaced from lo to hi with per_decade points per decade, both ends included.
std::vector<double> log_grid(double lo, double hi, int per_decade);

/// Integrator settings for one run after applying the spec overrides.
IntegratorConfig integrator_for(const ExperimentSpec& spec, const ModelParams& p, double t_s);

/// Branch with the largest z among the steady states at delta (charge on the left dot).
BlochState left_localized_steady_state(const ModelParams& p, double delta, int n_starts, std::uint64_t seed);

// --- hysteresis -------------------------------------------------------------

struct HysteresisRun {
    ModelParams params;
    double t_s = 0.0;
    double p_up_zero = 0.0;    ///< P at delta = 0 on the up-sweep
    double p_down_zero = 0.0;  ///< P at delta = 0 on the down-sweep
    double width = 0.0;        ///< |p_up_zero - p_down_zero|
    double max_gap = 0.0;      ///< max over delta of |P_up - P_down|
    IntegrationStats stats;
    double energy_balance = 0.0;
    std::vector<TrajectorySample> up;
    std::vector<TrajectorySample> down;
};

struct HysteresisResult {
    std::vector<HysteresisRun> runs;
};

HysteresisResult run_hysteresis(const ExperimentSpec& spec, unsigned workers = 1);

/// Linear interpolation of P(delta) along a monotone sweep.
double polarization_at(const std::vector<TrajectorySample>& sweep, double delta);

// --- memory -----------------------------------------------------------------

struct RegionStats {
    double p_end = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;
};

struct MemoryRun {
    ModelParams params;
    double t_s = 0.0;
    double t_hold = 0.0;
    std::array<RegionStats, 4> regions{};  ///< I to IV, each over its closed time interval
    IntegrationStats stats;
    Trajectory trajectory;
};

struct MemoryResult {
    std::vector<MemoryRun> runs;
};

MemoryResult run_memory(const ExperimentSpec& spec, unsigned workers = 1);

// --- steady-state curve ------------------------------------------------------

struct SteadyCurveRow {
    double lambda = 0.0;
    double k_t = 0.0;
    double delta = 0.0;
    int branch = 0;
    BlochState state;
    double energy = 0.0;
    bool stable = false;
};

struct SteadyCurveResult {
    std::vector<SteadyCurveRow> rows;
};

SteadyCurveResult run_steady_curve(const ExperimentSpec& spec, unsigned workers = 1);

// --- isolated excess energy ----------------------------------------------------

struct ExcessRow {
    double lambda = 0.0;
    double t_s = 0.0;
    double beta = 0.0;
    double e_excess = 0.0;
};

struct ExcessResult {
    std::vector<ExcessRow> rows;
};

ExcessResult run_excess_isolated(const ExperimentSpec& spec, unsigned workers = 1);

// --- dissipation sweep -------------------------------------------------------

struct DissipationRow {
    double lambda = 0.0;
    double t_s = 0.0;
    double t_d = 0.0;
    double k_t = 0.0;
    DissipationReport report;
    double energy_balance = 0.0;
    IntegrationStats stats;
};

struct DissipationResult {
    std::vector<DissipationRow> rows;
};

DissipationResult run_dissipation_sweep(const ExperimentSpec& spec, unsigned workers = 1);

// --- tables --------------------------------------------------------------------

csv::Table to_table(const HysteresisResult& r, bool trajectories);
csv::Table hysteresis_summary_table(const HysteresisResult& r);
csv::Table to_table(const MemoryResult& r, bool trajectories);
csv::Table memory_summary_table(const MemoryResult& r);
csv::Table to_table(const SteadyCurveResult& r);
csv::Table to_table(const ExcessResult& r);
csv::Table to_table(const DissipationResult& r);

} // namespace molqca
