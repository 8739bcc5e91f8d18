#include "molqca/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>

#include "molqca/config.hpp"
#include "molqca/csv.hpp"
#include "molqca/errors.hpp"
#include "molqca/experiments.hpp"

namespace molqca {

namespace {

struct Outputs {
    std::string main_file;
    std::optional<std::string> summary_file;
};

Outputs output_names(const ExperimentSpec& spec) {
    Outputs o;
    switch (spec.kind) {
    case ExperimentKind::steady_curve: o.main_file = "steady_curve.csv"; break;
    case ExperimentKind::hysteresis:
        o.main_file = "hysteresis.csv";
        o.summary_file = "hysteresis_summary.csv";
        break;
    case ExperimentKind::memory:
        o.main_file = "memory.csv";
        o.summary_file = "memory_summary.csv";
        break;
    case ExperimentKind::dissipation_sweep: o.main_file = "dissipation.csv"; break;
    case ExperimentKind::excess_isolated: o.main_file = "excess.csv"; break;
    }
    if (!spec.output.empty()) o.main_file = spec.output;
    return o;
}

struct Tables {
    csv::Table main;
    std::optional<csv::Table> summary;
};

Tables execute(const RunConfig& cfg, std::ostream& log, bool quiet) {
    const ExperimentSpec& spec = cfg.spec;
    Tables t;
    log << std::setprecision(6);
    switch (spec.kind) {
    case ExperimentKind::steady_curve: {
        const SteadyCurveResult r = run_steady_curve(spec, cfg.workers);
        t.main = to_table(r);
        if (!quiet) log << "steady states: " << r.rows.size() << " rows\n";
        break;
    }
    case ExperimentKind::hysteresis: {
        const HysteresisResult r = run_hysteresis(spec, cfg.workers);
        t.main = to_table(r, spec.trajectories);
        t.summary = hysteresis_summary_table(r);
        if (!quiet) {
            for (const HysteresisRun& run : r.runs) {
                log << "lambda=" << run.params.lambda << " t_s=" << run.t_s << " t_d=" << run.params.t_d
                    << " k_t=" << run.params.k_t << ": P_up(0)=" << run.p_up_zero << " P_down(0)=" << run.p_down_zero
                    << " width=" << run.width << "\n";
            }
        }
        break;
    }
    case ExperimentKind::memory: {
        const MemoryResult r = run_memory(spec, cfg.workers);
        t.main = to_table(r, spec.trajectories);
        t.summary = memory_summary_table(r);
        if (!quiet) {
            for (const MemoryRun& run : r.runs) {
                log << "lambda=" << run.params.lambda << ": P at end of regions I-IV =";
                for (const RegionStats& st : run.regions) log << ' ' << st.p_end;
                log << "\n";
            }
        }
        break;
    }
    case ExperimentKind::dissipation_sweep: {
        const DissipationResult r = run_dissipation_sweep(spec, cfg.workers);
        t.main = to_table(r);
        if (!quiet) log << "dissipation sweep: " << r.rows.size() << " runs\n";
        break;
    }
    case ExperimentKind::excess_isolated: {
        const ExcessResult r = run_excess_isolated(spec, cfg.workers);
        t.main = to_table(r);
        if (!quiet) log << "excess energy: " << r.rows.size() << " runs\n";
        break;
    }
    }
    return t;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Switching dynamics of a molecular double-dot cell coupled to a thermal bath", "molqca"};
    app.fallthrough();

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    bool quiet = false;
    app.add_option("--config", config_path, "configuration file (key = value)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "seed for the random solver starts");
    app.add_option("--workers", workers, "number of worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", quiet, "suppress the run summary");

    const std::pair<const char*, const char*> commands[] = {
        {"steady", "steady-state polarization curve with all coexisting branches"},
        {"hysteresis", "forward and backward bias sweeps"},
        {"memory", "write and hold a 1 bit, then a 0 bit"},
        {"dissipation", "dissipated energy over a grid of switching times"},
        {"excess", "excess energy of an isolated cell after a sweep"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);
    app.require_subcommand(1);

    if (argc <= 1) {
        err << app.help();
        return exit_config_error;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return exit_config_error;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    const ExperimentKind kind = *experiment_from_name(command);

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg = load_config(config_path, kind);
        } else {
            cfg = parse_config("", kind);
        }
        if (out_dir) cfg.out_dir = *out_dir;
        if (seed) cfg.spec.seed = *seed;
        if (workers) cfg.workers = *workers;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }

    Tables tables;
    try {
        tables = execute(cfg, out, quiet);
    } catch (const StiffnessError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical_error;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical_error;
    }

    const Outputs names = output_names(cfg.spec);
    const std::filesystem::path dir(cfg.out_dir);
    try {
        csv::write_file(tables.main, dir / names.main_file);
        if (tables.summary && names.summary_file) {
            csv::write_file(*tables.summary, dir / *names.summary_file);
        }
    } catch (const csv::IoError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    if (!quiet) out << "wrote " << (dir / names.main_file).string() << "\n";
    return exit_ok;
}

} // namespace molqca
