#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "molqca/cli.hpp"
#include "molqca/csv.hpp"

using namespace molqca;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "molqca");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "molqca_cli_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

} // namespace

TEST_SUITE("cli") {

TEST_CASE("no arguments prints usage and fails") {
    const Result r = run({});
    CHECK(r.code == exit_config_error);
    CHECK(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("help succeeds") {
    CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("unknown subcommand or flag") {
    CHECK(run({"frobnicate"}).code == exit_config_error);
    CHECK(run({"steady", "--bogus"}).code == exit_config_error);
}

TEST_CASE("steady curve has three branches at zero bias") {
    const fs::path dir = scratch("steady");
    write(dir / "bistable.cfg", "experiment = steady\nlambda = 5\nk_t = 0.25\n");
    const Result r = run({"steady", "--config", (dir / "bistable.cfg").string(), "--out", dir.string(), "--quiet"});
    REQUIRE(r.code == exit_ok);
    CHECK(r.out.empty());
    const auto rows = csv::parse(slurp(dir / "steady_curve.csv"));
    REQUIRE(!rows.empty());
    CHECK(rows[0] == std::vector<std::string>{"lambda", "k_t", "delta", "branch_index", "x", "z", "energy", "stable"});
    int at_zero = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (csv::parse_double(rows[i][2]) == 0.0) ++at_zero;
    }
    CHECK(at_zero == 3);
}

TEST_CASE("config errors exit with 1") {
    const fs::path dir = scratch("bad");
    write(dir / "bad.cfg", "lambda = -1\n");
    const Result r = run({"hysteresis", "--config", (dir / "bad.cfg").string(), "--out", dir.string()});
    CHECK(r.code == exit_config_error);
    CHECK(r.err.find("lambda") != std::string::npos);
    CHECK(run({"hysteresis", "--config", (dir / "missing.cfg").string()}).code == exit_config_error);
    write(dir / "other.cfg", "experiment = memory\n");
    CHECK(run({"hysteresis", "--config", (dir / "other.cfg").string()}).code == exit_config_error);
}

TEST_CASE("numerical failures exit with 2") {
    const fs::path dir = scratch("stiff");
    write(dir / "stiff.cfg", "t_s = 10\nrel_tol = 1e-300\nabs_tol = 1e-300\n");
    const Result r = run({"dissipation", "--config", (dir / "stiff.cfg").string(), "--out", dir.string()});
    CHECK(r.code == exit_numerical_error);
    CHECK(r.err.find("step size") != std::string::npos);
}

TEST_CASE("output is identical for any worker count") {
    const fs::path dir = scratch("workers");
    write(dir / "grid.cfg", "lambda = 0\nlambda = 3\nt_s_min = 10\nt_s_max = 100\nt_s_per_decade = 3\n");
    const std::string cfg = (dir / "grid.cfg").string();
    REQUIRE(run({"dissipation", "--config", cfg, "--out", (dir / "w1").string(), "--workers", "1", "--quiet"}).code == 0);
    REQUIRE(run({"dissipation", "--config", cfg, "--out", (dir / "w8").string(), "--workers", "8", "--quiet"}).code == 0);
    const std::string a = slurp(dir / "w1" / "dissipation.csv");
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "w8" / "dissipation.csv"));
    const auto rows = csv::parse(a);
    CHECK(rows.size() == 1 + 2 * 4);
}

TEST_CASE("flags after the subcommand and seed override") {
    const fs::path dir = scratch("flags");
    write(dir / "s.cfg", "delta_points = 5\nn_starts = 20\n");
    const Result r = run({"steady", "--config", (dir / "s.cfg").string(), "--seed", "7", "--out", dir.string()});
    CHECK(r.code == exit_ok);
    CHECK(r.out.find("steady_curve.csv") != std::string::npos);
    CHECK(fs::exists(dir / "steady_curve.csv"));
}

TEST_CASE("hysteresis writes a trajectory table and a summary") {
    const fs::path dir = scratch("hyst");
    write(dir / "h.cfg", "lambda = 10\nt_s = 40\n");
    REQUIRE(run({"hysteresis", "--config", (dir / "h.cfg").string(), "--out", dir.string(), "--quiet"}).code == 0);
    CHECK(csv::parse(slurp(dir / "hysteresis.csv")).size() > 10);
    CHECK(csv::parse(slurp(dir / "hysteresis_summary.csv")).size() == 2);
}

} // TEST_SUITE
