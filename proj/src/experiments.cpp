#include "molqca/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "molqca/errors.hpp"
#include "molqca/steady.hpp"
#include "molqca/waveforms.hpp"

namespace molqca {

namespace {

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 5> kind_names{{
    {ExperimentKind::hysteresis, "hysteresis"},
    {ExperimentKind::memory, "memory"},
    {ExperimentKind::steady_curve, "steady_curve"},
    {ExperimentKind::excess_isolated, "excess_isolated"},
    {ExperimentKind::dissipation_sweep, "dissipation_sweep"},
}};

// Only the endpoints are needed from sweep-grid runs.
constexpr std::size_t endpoints_only = std::size_t{1} << 40;
constexpr std::size_t trajectory_stride = 20;

// Runs job(i) for i in [0, n) on up to `workers` threads. Every item runs even
// if another fails; the failure with the lowest index is rethrown.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& job) {
    std::vector<std::exception_ptr> errors(n);
    auto guarded = [&](std::size_t i) {
        try {
            job(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t threads = std::min<std::size_t>(std::max(workers, 1u), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) guarded(i);
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string describe(std::string_view what, const ModelParams& p, double t_s) {
    std::ostringstream out;
    out << what << " run (lambda=" << p.lambda << ", t_s=" << t_s << ", t_d=" << p.t_d << ", k_t=" << p.k_t
        << ")";
    return out.str();
}

template <class F>
auto with_context(const std::string& context, F&& f) {
    try {
        return f();
    } catch (const StiffnessError& e) {
        throw StiffnessError(context + ": " + e.what(), e.time(), e.step());
    } catch (const DomainError& e) {
        throw DomainError(context + ": " + e.what());
    }
}

void require(bool ok, const std::string& message) {
    if (!ok) throw DomainError(message);
}

void require_list(const std::vector<double>& v, const char* name) {
    require(!v.empty(), std::string(name) + " list is empty");
}

double hold_time(const ExperimentSpec& spec, const ModelParams& p) {
    if (spec.t_hold) return *spec.t_hold;
    return p.isolated() ? 0.0 : 10.0 * p.t_d;
}

struct GridPoint {
    ModelParams params;
    double t_s;
};

std::vector<GridPoint> parameter_grid(const ExperimentSpec& spec, const std::vector<double>& times,
                                      bool isolated) {
    std::vector<GridPoint> grid;
    const std::vector<double> td_list = isolated ? std::vector<double>{units::infinite_time} : spec.t_d;
    const std::vector<double> kt_list = isolated ? std::vector<double>{0.0} : spec.k_t;
    for (double lambda : spec.lambda)
        for (double t_d : td_list)
            for (double k_t : kt_list)
                for (double t_s : times) {
                    ModelParams p{spec.gamma, lambda, t_d, k_t};
                    p.validate();
                    grid.push_back({p, t_s});
                }
    return grid;
}

} // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
    for (const auto& [k, name] : kind_names) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) noexcept {
    for (const auto& [k, n] : kind_names) {
        if (n == name) return k;
    }
    return std::nullopt;
}

void ExperimentSpec::validate() const {
    require(gamma > 0.0 && std::isfinite(gamma), "gamma must be finite and > 0");
    require_list(lambda, "lambda");
    require_list(t_d, "t_d");
    require_list(k_t, "k_t");
    for (double v : lambda) require(v >= 0.0 && std::isfinite(v), "lambda must be finite and >= 0");
    for (double v : t_d) require(v > 0.0, "t_d must be > 0");
    for (double v : k_t) require(v >= 0.0 && std::isfinite(v), "k_t must be finite and >= 0");
    for (double v : t_s) require(v > 0.0 && std::isfinite(v), "t_s must be finite and > 0");
    if (t_s.empty()) {
        require(kind == ExperimentKind::dissipation_sweep || kind == ExperimentKind::excess_isolated,
                "t_s list is empty");
        require(t_s_min > 0.0 && std::isfinite(t_s_max) && t_s_max >= t_s_min,
                "t_s_min/t_s_max must satisfy 0 < t_s_min <= t_s_max");
        require(t_s_per_decade >= 1, "t_s_per_decade must be >= 1");
    }
    require(std::isfinite(delta_min) && std::isfinite(delta_max) && delta_min < delta_max,
            "delta_min must be < delta_max");
    require(delta_amp >= 0.0 && std::isfinite(delta_amp), "delta_amp must be finite and >= 0");
    if (t_hold) require(*t_hold >= 0.0 && std::isfinite(*t_hold), "t_hold must be finite and >= 0");
    require(n_starts >= 1, "n_starts must be >= 1");
    require(delta_points >= 2, "delta_points must be >= 2");
    if (integrator.dt_max) require(*integrator.dt_max > 0.0, "dt_max must be > 0");
    if (integrator.rel_tol) require(*integrator.rel_tol > 0.0, "rel_tol must be > 0");
    if (integrator.abs_tol) require(*integrator.abs_tol > 0.0, "abs_tol must be > 0");
    if (integrator.record_stride) require(*integrator.record_stride >= 1, "record_stride must be >= 1");
}

ExperimentSpec default_spec(ExperimentKind kind) {
    ExperimentSpec s;
    s.kind = kind;
    switch (kind) {
    case ExperimentKind::hysteresis:
    case ExperimentKind::memory:
        break;
    case ExperimentKind::steady_curve:
        s.lambda = {5.0};
        s.k_t = {0.25};
        break;
    case ExperimentKind::excess_isolated:
        s.lambda = {0.0, 2.0, 6.0, 10.0};
        s.t_s.clear();
        s.t_s_min = 1.0;
        s.t_s_max = 100.0;
        s.t_d = {units::infinite_time};
        s.k_t = {0.0};
        break;
    case ExperimentKind::dissipation_sweep:
        s.lambda = {0.0};
        s.t_s.clear();
        s.t_d = {100.0};
        s.k_t = {3.0};
        break;
    }
    return s;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    require(lo > 0.0 && hi >= lo && per_decade >= 1, "invalid log grid");
    const double decades = std::log10(hi / lo);
    const int steps = std::max(0, static_cast<int>(std::lround(decades * per_decade)));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        out.push_back(i == steps ? hi : lo * std::pow(10.0, static_cast<double>(i) / per_decade));
    }
    return out;
}

std::vector<double> switching_times(const ExperimentSpec& spec) {
    if (!spec.t_s.empty()) return spec.t_s;
    return log_grid(spec.t_s_min, spec.t_s_max, spec.t_s_per_decade);
}

IntegratorConfig integrator_for(const ExperimentSpec& spec, const ModelParams& p, double t_s) {
    IntegratorConfig cfg = default_integrator_config(p, t_s);
    if (spec.kind == ExperimentKind::dissipation_sweep || spec.kind == ExperimentKind::excess_isolated) {
        cfg.record_stride = endpoints_only;
    } else {
        cfg.record_stride = trajectory_stride;
    }
    const IntegratorOverrides& o = spec.integrator;
    if (o.dt_max) cfg.dt_max = *o.dt_max;
    if (o.rel_tol) cfg.rel_tol = *o.rel_tol;
    if (o.abs_tol) cfg.abs_tol = *o.abs_tol;
    if (o.record_stride) cfg.record_stride = *o.record_stride;
    cfg.dt_min = std::min(cfg.dt_min, 1e-3 * cfg.dt_max);
    return cfg;
}

BlochState left_localized_steady_state(const ModelParams& p, double delta, int n_starts, std::uint64_t seed) {
    const SolutionSet set = enumerate_steady_states(p, delta, n_starts, seed);
    for (const SteadySolution& s : set.solutions) {
        if (s.stable) return s.state;
    }
    throw std::runtime_error("no stable steady state at delta = " + std::to_string(delta));
}

// --- hysteresis -------------------------------------------------------------

double polarization_at(const std::vector<TrajectorySample>& sweep, double delta) {
    if (sweep.empty()) throw DomainError("empty sweep");
    const bool rising = sweep.back().delta >= sweep.front().delta;
    auto before = [rising](const TrajectorySample& s, double d) { return rising ? s.delta < d : s.delta > d; };
    auto it = std::lower_bound(sweep.begin(), sweep.end(), delta, before);
    if (it == sweep.begin()) return it->state.z;
    if (it == sweep.end()) return sweep.back().state.z;
    const TrajectorySample& b = *it;
    const TrajectorySample& a = *(it - 1);
    if (b.delta == a.delta) return b.state.z;
    const double f = (delta - a.delta) / (b.delta - a.delta);
    return a.state.z + f * (b.state.z - a.state.z);
}

HysteresisResult run_hysteresis(const ExperimentSpec& spec, unsigned workers) {
    spec.validate();
    const std::vector<GridPoint> grid = parameter_grid(spec, switching_times(spec), false);
    HysteresisResult result;
    result.runs.resize(grid.size());
    constexpr int gap_points = 1001;

    parallel_for(grid.size(), workers, [&](std::size_t i) {
        const ModelParams& p = grid[i].params;
        const double t_s = grid[i].t_s;
        HysteresisRun& run = result.runs[i];
        run.params = p;
        run.t_s = t_s;
        with_context(describe("hysteresis", p, t_s), [&] {
            const double hold = hold_time(spec, p);
            const BiasWaveform w = hysteresis_protocol(spec.delta_min, spec.delta_max, t_s, hold);
            const BlochState s0 = left_localized_steady_state(p, spec.delta_min, spec.n_starts, spec.seed);
            Trajectory traj = integrate(s0, w, p, integrator_for(spec, p, t_s));
            run.stats = traj.stats;
            run.energy_balance = energy_balance_residual(traj);
            const double down_start = t_s + hold;
            for (const TrajectorySample& s : traj.samples) {
                if (s.t <= t_s) run.up.push_back(s);
                if (s.t >= down_start) run.down.push_back(s);
            }
            run.p_up_zero = polarization_at(run.up, 0.0);
            run.p_down_zero = polarization_at(run.down, 0.0);
            run.width = std::abs(run.p_up_zero - run.p_down_zero);
            for (int k = 0; k < gap_points; ++k) {
                const double d = spec.delta_min + (spec.delta_max - spec.delta_min) * k / (gap_points - 1);
                run.max_gap = std::max(run.max_gap, std::abs(polarization_at(run.up, d) - polarization_at(run.down, d)));
            }
            return 0;
        });
    });
    return result;
}

// --- memory -----------------------------------------------------------------

MemoryResult run_memory(const ExperimentSpec& spec, unsigned workers) {
    spec.validate();
    const std::vector<GridPoint> grid = parameter_grid(spec, switching_times(spec), false);
    MemoryResult result;
    result.runs.resize(grid.size());

    parallel_for(grid.size(), workers, [&](std::size_t i) {
        const ModelParams& p = grid[i].params;
        const double t_s = grid[i].t_s;
        MemoryRun& run = result.runs[i];
        run.params = p;
        run.t_s = t_s;
        with_context(describe("memory", p, t_s), [&] {
            run.t_hold = hold_time(spec, p);
            const BiasWaveform w = memory_protocol(spec.delta_amp, t_s, run.t_hold);
            const BlochState s0 = left_localized_steady_state(p, 0.0, spec.n_starts, spec.seed);
            run.trajectory = integrate(s0, w, p, integrator_for(spec, p, t_s));
            run.stats = run.trajectory.stats;
            const auto bounds = memory_region_bounds(t_s, run.t_hold);
            for (std::size_t r = 0; r < 4; ++r) {
                RegionStats& st = run.regions[r];
                st.p_min = std::numeric_limits<double>::infinity();
                st.p_max = -std::numeric_limits<double>::infinity();
                for (const TrajectorySample& s : run.trajectory.samples) {
                    if (s.t < bounds[r] || s.t > bounds[r + 1]) continue;
                    st.p_min = std::min(st.p_min, s.state.z);
                    st.p_max = std::max(st.p_max, s.state.z);
                    st.p_end = s.state.z;
                }
            }
            return 0;
        });
    });
    return result;
}

// --- steady-state curve ------------------------------------------------------

SteadyCurveResult run_steady_curve(const ExperimentSpec& spec, unsigned workers) {
    spec.validate();
    struct Point {
        ModelParams params;
        double delta;
    };
    std::vector<Point> points;
    for (double lambda : spec.lambda)
        for (double k_t : spec.k_t) {
            ModelParams p{spec.gamma, lambda, units::infinite_time, k_t};
            p.validate();
            const double half = 3.0 * (lambda + k_t > 0.0 ? lambda + k_t : spec.gamma);
            for (int k = 0; k < spec.delta_points; ++k) {
                points.push_back({p, -half + 2.0 * half * k / (spec.delta_points - 1)});
            }
        }

    std::vector<SolutionSet> sets(points.size());
    parallel_for(points.size(), workers, [&](std::size_t i) {
        sets[i] = enumerate_steady_states(points[i].params, points[i].delta, spec.n_starts, spec.seed);
    });

    SteadyCurveResult result;
    for (std::size_t i = 0; i < points.size(); ++i) {
        int branch = 0;
        for (const SteadySolution& s : sets[i].solutions) {
            result.rows.push_back({points[i].params.lambda, points[i].params.k_t, points[i].delta, branch++,
                                   s.state, s.energy, s.stable});
        }
    }
    return result;
}

// --- isolated excess energy ----------------------------------------------------

ExcessResult run_excess_isolated(const ExperimentSpec& spec, unsigned workers) {
    spec.validate();
    const std::vector<GridPoint> grid = parameter_grid(spec, switching_times(spec), true);
    ExcessResult result;
    result.rows.resize(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        const ModelParams& p = grid[i].params;
        const double t_s = grid[i].t_s;
        with_context(describe("excess", p, t_s), [&] {
            const BiasWaveform w = BiasWaveform::ramp(spec.delta_min, spec.delta_max, t_s);
            const BlochState s0 = left_localized_steady_state(p, spec.delta_min, spec.n_starts, spec.seed);
            const Trajectory traj = integrate(s0, w, p, integrator_for(spec, p, t_s));
            result.rows[i] = {p.lambda, t_s, adiabaticity_beta(p, t_s, spec.delta_min, spec.delta_max),
                              excess_energy_isolated(traj, p)};
            return 0;
        });
    });
    return result;
}

// --- dissipation sweep -------------------------------------------------------

DissipationResult run_dissipation_sweep(const ExperimentSpec& spec, unsigned workers) {
    spec.validate();
    const std::vector<GridPoint> grid = parameter_grid(spec, switching_times(spec), false);
    DissipationResult result;
    result.rows.resize(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        const ModelParams& p = grid[i].params;
        const double t_s = grid[i].t_s;
        with_context(describe("dissipation", p, t_s), [&] {
            const BiasWaveform w = BiasWaveform::ramp(spec.delta_min, spec.delta_max, t_s);
            const BlochState s0 = left_localized_steady_state(p, spec.delta_min, spec.n_starts, spec.seed);
            const Trajectory traj = integrate(s0, w, p, integrator_for(spec, p, t_s));
            DissipationRow& row = result.rows[i];
            row.lambda = p.lambda;
            row.t_s = t_s;
            row.t_d = p.t_d;
            row.k_t = p.k_t;
            row.report = dissipation_report(traj, p, spec.delta_min, spec.delta_max);
            row.energy_balance = energy_balance_residual(traj);
            row.stats = traj.stats;
            return 0;
        });
    });
    return result;
}

// --- tables --------------------------------------------------------------------

namespace {

csv::Cell as_cell(std::size_t v) { return static_cast<std::int64_t>(v); }

} // namespace

csv::Table to_table(const HysteresisResult& r, bool trajectories) {
    csv::Table t;
    t.columns = {"lambda", "t_s", "t_d", "k_t", "direction", "t", "delta", "p"};
    if (!trajectories) return t;
    for (const HysteresisRun& run : r.runs) {
        const ModelParams& p = run.params;
        for (const auto* sweep : {&run.up, &run.down}) {
            const std::string dir = sweep == &run.up ? "up" : "down";
            for (const TrajectorySample& s : *sweep) {
                t.rows.push_back({p.lambda, run.t_s, p.t_d, p.k_t, dir, s.t, s.delta, s.state.z});
            }
        }
    }
    return t;
}

csv::Table hysteresis_summary_table(const HysteresisResult& r) {
    csv::Table t;
    t.columns = {"lambda", "t_s", "t_d", "k_t", "p_up_zero", "p_down_zero", "width", "max_gap", "accepted_steps",
                 "rejected_steps", "clip_events"};
    for (const HysteresisRun& run : r.runs) {
        const ModelParams& p = run.params;
        t.rows.push_back({p.lambda, run.t_s, p.t_d, p.k_t, run.p_up_zero, run.p_down_zero, run.width, run.max_gap,
                          as_cell(run.stats.accepted_steps), as_cell(run.stats.rejected_steps),
                          as_cell(run.stats.clip_events)});
    }
    return t;
}

csv::Table to_table(const MemoryResult& r, bool trajectories) {
    csv::Table t;
    t.columns = {"lambda", "t_s", "t_d", "k_t", "region", "t", "delta", "p"};
    if (!trajectories) return t;
    for (const MemoryRun& run : r.runs) {
        const ModelParams& p = run.params;
        const auto bounds = memory_region_bounds(run.t_s, run.t_hold);
        for (const TrajectorySample& s : run.trajectory.samples) {
            std::int64_t region = 1;
            while (region < 4 && s.t > bounds[static_cast<std::size_t>(region)]) ++region;
            t.rows.push_back({p.lambda, run.t_s, p.t_d, p.k_t, region, s.t, s.delta, s.state.z});
        }
    }
    return t;
}

csv::Table memory_summary_table(const MemoryResult& r) {
    csv::Table t;
    t.columns = {"lambda", "t_s", "t_d", "k_t", "region", "p_end", "p_min", "p_max"};
    for (const MemoryRun& run : r.runs) {
        const ModelParams& p = run.params;
        for (std::size_t k = 0; k < run.regions.size(); ++k) {
            const RegionStats& st = run.regions[k];
            t.rows.push_back({p.lambda, run.t_s, p.t_d, p.k_t, as_cell(k + 1), st.p_end, st.p_min, st.p_max});
        }
    }
    return t;
}

csv::Table to_table(const SteadyCurveResult& r) {
    csv::Table t;
    t.columns = {"lambda", "k_t", "delta", "branch_index", "x", "z", "energy", "stable"};
    for (const SteadyCurveRow& row : r.rows) {
        t.rows.push_back({row.lambda, row.k_t, row.delta, std::int64_t{row.branch}, row.state.x, row.state.z,
                          row.energy, std::int64_t{row.stable ? 1 : 0}});
    }
    return t;
}

csv::Table to_table(const ExcessResult& r) {
    csv::Table t;
    t.columns = {"lambda", "t_s", "beta", "e_excess"};
    for (const ExcessRow& row : r.rows) {
        t.rows.push_back({row.lambda, row.t_s, row.beta, row.e_excess});
    }
    return t;
}

csv::Table to_table(const DissipationResult& r) {
    csv::Table t;
    t.columns = {"lambda", "t_s", "t_d", "k_t", "beta", "e_switch", "e_excess", "e_diss"};
    for (const DissipationRow& row : r.rows) {
        t.rows.push_back({row.lambda, row.t_s, row.t_d, row.k_t, row.report.beta, row.report.e_switch,
                          row.report.e_excess, row.report.e_diss});
    }
    return t;
}

} // namespace molqca
