#include <doctest.h>

#include "molqca/config.hpp"

using namespace molqca;

namespace {

ConfigError parse_error(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected ConfigError");
    return ConfigError(ConfigErrorKind::syntax, 0, "", "");
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("minimal hysteresis config") {
    const RunConfig c = parse_config(R"(
# switching with a slow bath
experiment = hysteresis
lambda = 10
t_s = 1000
t_d = 10
k_t = 1
delta_min = -25
delta_max = 25
)");
    CHECK(c.spec.kind == ExperimentKind::hysteresis);
    CHECK(c.spec.lambda == std::vector<double>{10.0});
    CHECK(c.spec.t_s == std::vector<double>{1000.0});
    CHECK(c.spec.t_d == std::vector<double>{10.0});
    CHECK(c.spec.k_t == std::vector<double>{1.0});
    CHECK(c.workers == 1);
}

TEST_CASE("empty config gives the default experiment") {
    const RunConfig c = parse_config("");
    CHECK(c.spec == default_spec(ExperimentKind::hysteresis));
    CHECK(parse_config("", ExperimentKind::memory).spec.kind == ExperimentKind::memory);
    CHECK(parse_config("experiment = steady").spec == default_spec(ExperimentKind::steady_curve));
}

TEST_CASE("repeated list keys accumulate") {
    const RunConfig c = parse_config("lambda = 0\nlambda = 5 # second\n  lambda=10\nt_d = inf\nt_d = 100\n");
    CHECK(c.spec.lambda == std::vector<double>{0.0, 5.0, 10.0});
    CHECK(std::isinf(c.spec.t_d[0]));
    CHECK(c.spec.t_d[1] == 100.0);
}

TEST_CASE("range errors name the field and line") {
    const ConfigError e = parse_error("experiment = hysteresis\nlambda = -1\n");
    CHECK(e.kind() == ConfigErrorKind::range);
    CHECK(e.field() == "lambda");
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("lambda") != std::string::npos);
    CHECK(parse_error("t_s = 0").field() == "t_s");
    CHECK(parse_error("n_starts = 0").kind() == ConfigErrorKind::range);
    CHECK(parse_error("delta_min = 5\ndelta_max = 1").field() == "delta_max");
}

TEST_CASE("duplicate scalar keys") {
    const ConfigError e = parse_error("gamma = 1\nseed = 3\ngamma = 1\n");
    CHECK(e.kind() == ConfigErrorKind::duplicate_key);
    CHECK(e.line() == 3);
    CHECK(e.field() == "gamma");
}

TEST_CASE("unknown keys") {
    const ConfigError e = parse_error("lamda = 1");
    CHECK(e.kind() == ConfigErrorKind::unknown_key);
    CHECK(e.field() == "lamda");
}

TEST_CASE("syntax errors") {
    CHECK(parse_error("lambda 1").kind() == ConfigErrorKind::syntax);
    CHECK(parse_error("lambda =").kind() == ConfigErrorKind::syntax);
    CHECK(parse_error("= 3").kind() == ConfigErrorKind::syntax);
    CHECK(parse_error("Lambda = 3").kind() == ConfigErrorKind::syntax);
}

TEST_CASE("type errors") {
    CHECK(parse_error("lambda = ten").kind() == ConfigErrorKind::type);
    CHECK(parse_error("n_starts = 2.5").kind() == ConfigErrorKind::type);
    CHECK(parse_error("trajectories = maybe").kind() == ConfigErrorKind::type);
    CHECK(parse_error("lambda = inf").kind() == ConfigErrorKind::type);
    CHECK(parse_error("seed = -1").kind() == ConfigErrorKind::type);
}

TEST_CASE("experiment name must be known and agree with the command") {
    CHECK(parse_error("experiment = bogus").kind() == ConfigErrorKind::range);
    CHECK_THROWS_AS(parse_config("experiment = memory", ExperimentKind::hysteresis), ConfigError);
    CHECK_NOTHROW(parse_config("experiment = dissipation", ExperimentKind::dissipation_sweep));
}

TEST_CASE("missing file") {
    try {
        load_config("/nonexistent/dir/x.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.kind() == ConfigErrorKind::io);
    }
}

TEST_CASE("serialize then parse is lossless") {
    RunConfig c = parse_config(R"(
experiment = dissipation_sweep
gamma = 1
lambda = 0.1
lambda = 6.000000000000001
t_d = 100
t_d = inf
k_t = 3
t_s_min = 10
t_s_max = 100000
t_s_per_decade = 40
t_hold = 12.5
seed = 18446744073709551615
dt_max = 0.0123
rel_tol = 1e-9
abs_tol = 1e-11
record_stride = 4
trajectories = false
output = sweep, one.csv
out_dir = results/run 1
workers = 8
)");
    const std::string text = serialize_config(c);
    const RunConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);
    for (auto kind : {ExperimentKind::hysteresis, ExperimentKind::memory, ExperimentKind::steady_curve,
                      ExperimentKind::excess_isolated, ExperimentKind::dissipation_sweep}) {
        RunConfig d;
        d.spec = default_spec(kind);
        CHECK(parse_config(serialize_config(d)) == d);
    }
}

} // TEST_SUITE
