#include <doctest.h>

#include <random>

#include "molqca/dynamics.hpp"
#include "molqca/errors.hpp"
#include "molqca/steady.hpp"
#include "oracles.hpp"

using namespace molqca;
using doctest::Approx;

namespace {

double max_entry(const Matrix2c& m) { return m.cwiseAbs().maxCoeff(); }

ModelParams open_cell(double lambda, double t_d, double k_t) { return {1.0, lambda, t_d, k_t}; }

BlochState random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    while (true) {
        BlochState s{u(rng), u(rng), u(rng)};
        if (s.norm() <= 1.0) return s;
    }
}

} // namespace

TEST_SUITE("dynamics") {

TEST_CASE("jump operators") {
    const HamiltonianParts h = build_hamiltonian({}, 1.3, 0.0);
    SUBCASE("isolated cell has none") {
        const auto [l1, l2] = lindblad_ops(h, units::infinite_time, 1.0);
        CHECK(max_entry(l1) == 0.0);
        CHECK(max_entry(l2) == 0.0);
    }
    SUBCASE("zero temperature has no excitation") {
        const auto [l1, l2] = lindblad_ops(h, 10.0, 0.0);
        CHECK(l1.squaredNorm() == Approx(0.1));
        CHECK(max_entry(l2) == 0.0);
    }
    SUBCASE("detailed balance") {
        for (double k_t : {0.3, 1.0, 4.0}) {
            const auto [l1, l2] = lindblad_ops(h, 10.0, k_t);
            CHECK(l2.squaredNorm() / l1.squaredNorm() == Approx(std::exp(-h.gap() / k_t)).epsilon(1e-12));
        }
        const auto [l1, l2] = lindblad_ops(h, 10.0, 1e12);
        CHECK(l2.norm() == Approx(l1.norm()).epsilon(1e-10));
    }
    SUBCASE("decay maps the excited state onto the ground state") {
        const auto [l1, l2] = lindblad_ops(h, 4.0, 1.0);
        CHECK((l1 * h.eigvecs[1] - 0.5 * h.eigvecs[0]).norm() < 1e-14);
        CHECK((l1 * h.eigvecs[0]).norm() < 1e-14);
    }
}

TEST_CASE("matrix dissipator is traceless, Hermitian and matches the Bloch form") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const BlochState s = random_state(rng);
        const ModelParams p = open_cell(8.0 * u(rng), 0.5 + 50.0 * u(rng), i % 7 == 0 ? 0.0 : 4.0 * u(rng));
        const double delta = 30.0 * (u(rng) - 0.5);
        const HamiltonianParts h = build_hamiltonian(p, delta, s.z);
        const Matrix2c d = dissipator(s, h, p.t_d, p.k_t);
        CHECK(std::abs(d.trace()) < 1e-13);
        CHECK(max_entry(d - d.adjoint()) < 1e-15);
        // d rho = (d . sigma) / 2, so <sigma_i> changes at Tr(d sigma_i).
        const Vec3 from_matrix = oracle::bloch(d);
        const Vec3 closed = dissipator_bloch(s.vec(), h.total, p.t_d, p.k_t);
        CHECK((from_matrix - closed).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("dissipator fixed points") {
    const ModelParams p = open_cell(0.0, 10.0, 1.0);
    for (double delta : {-5.0, 0.0, 2.0}) {
        const HamiltonianParts h = build_hamiltonian(p, delta, 0.0);
        CHECK(max_entry(dissipator(gibbs_state(h, 1.0), h, 10.0, 1.0)) < 1e-12);
        const BlochState ground = gibbs_state(h, 0.0);
        CHECK(max_entry(dissipator(ground, h, 10.0, 0.0)) < 1e-15);
    }
}

TEST_CASE("excited state decays toward the ground state at rate 1/T_d") {
    const double t_d = 10.0;
    const HamiltonianParts h = build_hamiltonian({}, 2.0, 0.0);
    const BlochState ground = gibbs_state(h, 0.0);
    const BlochState excited = BlochState::from(-ground.vec());
    const Vec3 ds = dissipator_bloch(excited.vec(), h.total, t_d, 0.0);
    // Along the ground direction the Bloch projection moves from -1 toward +1 at 2 / T_d.
    CHECK(ds.dot(ground.vec()) == Approx(2.0 / t_d));
}

TEST_CASE("free precession") {
    const ModelParams p;
    const Vec3 ds = derivative({0, 0, 1}, 0.0, BiasWaveform::constant(0.0, 1.0), p);
    CHECK(ds[2] == 0.0);
    CHECK(ds[0] == Approx(0.0));
    // Precession about -x: the left-dot state rotates toward +y at 2 gamma z / hbar.
    CHECK(ds[1] == Approx(2.0 * p.gamma / units::hbar));
    CHECK(ds.norm() == Approx(2.0 * p.gamma / units::hbar));
}

TEST_CASE("the flow vanishes at a steady state") {
    const ModelParams p = open_cell(5.0, 10.0, 0.25);
    for (double delta : {0.0, 1.0, 10.0}) {
        for (const SteadySolution& s : enumerate_steady_states(p, delta, 50, 2).solutions) {
            CHECK(derivative(s.state, 0.0, BiasWaveform::constant(delta, 1.0), p).norm() < 1e-10);
        }
    }
}

TEST_CASE("derivative propagates waveform domain errors") {
    CHECK_THROWS_AS(derivative({0, 0, 1}, 2.0, BiasWaveform::constant(0.0, 1.0), {}), DomainError);
}

TEST_CASE("Rabi oscillation has period T_gamma") {
    const ModelParams p;
    IntegratorConfig cfg = default_integrator_config(p, 0.0);
    const Trajectory traj = integrate({0, 0, 1}, BiasWaveform::constant(0.0, 5.0), p, cfg);
    double worst = 0.0;
    for (const TrajectorySample& s : traj.samples) {
        worst = std::max(worst, std::abs(s.state.z - oracle::rabi_z(s.t)));
    }
    CHECK(worst < 1e-8);
    CHECK(traj.back().t == 5.0);
    CHECK(traj.back().state.z == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("isolated evolution conserves purity") {
    const ModelParams p = open_cell(10.0, units::infinite_time, 0.0);
    const BiasWaveform w = hysteresis_protocol(-25.0, 25.0, 500.0, 0.0);
    const Trajectory traj = integrate({0.1, 0.0, std::sqrt(0.99)}, w, p, default_integrator_config(p, 500.0));
    CHECK(traj.stats.max_norm_drift < 1e-8);
    for (const TrajectorySample& s : traj.samples) {
        CHECK(std::abs(s.state.norm() - 1.0) < 1e-8);
        CHECK(s.p_switch == 0.0);
    }
}

TEST_CASE("trajectory bookkeeping") {
    const ModelParams p = open_cell(5.0, 10.0, 1.0);
    const BiasWaveform w = hysteresis_protocol(-25.0, 25.0, 100.0, 20.0);
    IntegratorConfig cfg = default_integrator_config(p, 100.0);
    cfg.record_stride = 7;
    const Trajectory traj = integrate({0, 0, 1}, w, p, cfg);
    CHECK(traj.front().t == 0.0);
    CHECK(traj.back().t == w.total_duration());
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        CHECK(traj.samples[i].t > traj.samples[i - 1].t);
    }
    for (std::size_t k = 1; k <= w.size(); ++k) {
        const double join = w.segment_start(k);
        const bool kept = std::any_of(traj.samples.begin(), traj.samples.end(),
                                      [&](const TrajectorySample& s) { return s.t == join; });
        CHECK(kept);
    }
    for (const TrajectorySample& s : traj.samples) {
        CHECK(s.state.norm() <= 1.0 + 1e-9);
        CHECK(s.p3 + s.p4 == 0.0);
        CHECK(s.e1 < s.e2);
        CHECK(s.delta == Approx(w.eval(s.t).delta).epsilon(1e-12).scale(1.0));
    }
    IntegratorConfig dense = cfg;
    dense.record_stride = 1;
    const Trajectory all = integrate({0, 0, 1}, w, p, dense);
    CHECK(all.samples.size() > traj.samples.size());
    CHECK(all.back().state == traj.back().state);
    CHECK(all.stats.accepted_steps + 1 == all.samples.size());
}

TEST_CASE("step collapse raises a stiffness error") {
    const ModelParams p = open_cell(10.0, 10.0, 1.0);
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-300;
    cfg.abs_tol = 1e-300;
    try {
        integrate({0, 0, 1}, BiasWaveform::ramp(-25.0, 25.0, 10.0), p, cfg);
        FAIL("expected StiffnessError");
    } catch (const StiffnessError& e) {
        CHECK(e.step() < cfg.dt_min);
        CHECK(e.time() >= 0.0);
        CHECK(std::string(e.what()).find("step size") != std::string::npos);
    }
}

TEST_CASE("integrator input validation") {
    const ModelParams p;
    IntegratorConfig bad;
    bad.dt_max = 0.0;
    CHECK_THROWS_AS(integrate({0, 0, 1}, BiasWaveform::constant(0.0, 1.0), p, bad), DomainError);
    CHECK_THROWS_AS(integrate({0, 0, 1.5}, BiasWaveform::constant(0.0, 1.0), p, {}), InvalidStateError);
    CHECK_THROWS_AS(integrate({0, 0, 1}, BiasWaveform{}, p, {}), DomainError);
}

TEST_CASE("default step cap") {
    CHECK(default_integrator_config(open_cell(0, units::infinite_time, 0), 1e6).dt_max == Approx(0.05));
    CHECK(default_integrator_config(open_cell(0, 0.1, 1), 1e6).dt_max == Approx(0.005));
    CHECK(default_integrator_config(open_cell(0, 100, 1), 10.0).dt_max == Approx(0.01));
}

TEST_CASE("relaxation reaches the Gibbs state") {
    const double t_d = 10.0, k_t = 1.0, delta = 3.0;
    const ModelParams p = open_cell(0.0, t_d, k_t);
    const HamiltonianParts h = build_hamiltonian(p, delta, 0.0);
    const BlochState excited = BlochState::from(-gibbs_state(h, 0.0).vec());
    const RelaxResult r = relax_to_equilibrium(excited, delta, p, default_integrator_config(p, 0.0), 2000.0);
    REQUIRE(r.converged);
    CHECK(distance(r.state, gibbs_state(h, k_t)) < 1e-8);
    // Populations relax at (down + up), coherences at half that; the slower one sets the settling time.
    CHECK(r.elapsed > 5.0 * t_d);
    CHECK(r.elapsed < 60.0 * t_d);

    // Excited population against the rate equation part way through.
    IntegratorConfig cfg = default_integrator_config(p, 0.0);
    const Trajectory traj = integrate(excited, BiasWaveform::constant(delta, t_d), p, cfg);
    const Vec3 m = gibbs_state(h, 0.0).vec();
    const double p_exc = 0.5 * (1.0 - traj.back().state.vec().dot(m));
    CHECK(p_exc == Approx(oracle::excited_population(1.0, h.gap(), t_d, k_t, t_d)).epsilon(1e-8));
}

TEST_CASE("relaxation from a steady state returns immediately") {
    const ModelParams p = open_cell(5.0, 10.0, 0.25);
    const SteadySolution s = solve_self_consistent(p, 0.0, {0, 0, 0.9});
    const RelaxResult r = relax_to_equilibrium(s.state, 0.0, p, {}, 100.0);
    CHECK(r.converged);
    CHECK(r.elapsed == 0.0);
    CHECK_THROWS_AS(relax_to_equilibrium(s.state, 0.0, open_cell(5.0, units::infinite_time, 0.25), {}, 1.0),
                    DomainError);
}

TEST_CASE("relaxation flags an exhausted time budget") {
    const ModelParams p = open_cell(0.0, 10.0, 1.0);
    const RelaxResult r = relax_to_equilibrium({0, 0, 1}, 3.0, p, {}, 1.0);
    CHECK_FALSE(r.converged);
    CHECK(r.elapsed == 1.0);
}

TEST_CASE("bistable cell relaxes onto a stable branch, never the symmetric one") {
    const ModelParams p = open_cell(5.0, 10.0, 0.25);
    const SolutionSet set = enumerate_steady_states(p, 0.0, 100, 1);
    REQUIRE(set.solutions.size() == 3);
    const RelaxResult r = relax_to_equilibrium({0, 0, 0.5}, 0.0, p, {}, 5000.0);
    REQUIRE(r.converged);
    CHECK(r.state.z == Approx(set.solutions[0].state.z).epsilon(1e-6));

    std::mt19937_64 rng(31);
    for (int i = 0; i < 6; ++i) {
        BlochState s0 = random_state(rng);
        if (std::abs(s0.z) <= 0.01) continue;
        const RelaxResult ri = relax_to_equilibrium(s0, 0.0, p, {}, 5000.0);
        REQUIRE(ri.converged);
        double nearest = 1e9;
        bool on_stable = false;
        for (const SteadySolution& s : set.solutions) {
            const double d = distance(ri.state, s.state);
            if (d < nearest) {
                nearest = d;
                on_stable = s.stable;
            }
        }
        CHECK(nearest < 1e-6);
        CHECK(on_stable);
    }
}

TEST_CASE("switching with reorganization keeps the charge until past the crossover") {
    const ModelParams p = open_cell(10.0, 10.0, 1.0);
    const double t_s = 1000.0;
    const BlochState s0 = enumerate_steady_states(p, -25.0, 50, 1).solutions.front().state;
    IntegratorConfig cfg = default_integrator_config(p, t_s);
    const Trajectory traj = integrate(s0, BiasWaveform::ramp(-25.0, 25.0, t_s), p, cfg);
    const auto mid = std::find_if(traj.samples.begin(), traj.samples.end(),
                                  [&](const TrajectorySample& s) { return s.t >= t_s / 2; });
    REQUIRE(mid != traj.samples.end());
    CHECK(mid->state.z > 0.9);
    CHECK(traj.back().state.z < -0.99);

    // Halving both tolerances leaves the final polarization unchanged to 1e-6.
    IntegratorConfig tight = cfg;
    tight.rel_tol *= 0.5;
    tight.abs_tol *= 0.5;
    const Trajectory again = integrate(s0, BiasWaveform::ramp(-25.0, 25.0, t_s), p, tight);
    CHECK(std::abs(again.back().state.z - traj.back().state.z) < 1e-6);
}

TEST_CASE("fast switching leaves oscillations and incomplete transfer") {
    const ModelParams p = open_cell(10.0, 10.0, 1.0);
    const double t_s = 10.0;
    const BlochState s0 = enumerate_steady_states(p, -25.0, 50, 1).solutions.front().state;
    const Trajectory traj = integrate(s0, BiasWaveform::ramp(-25.0, 25.0, t_s), p, default_integrator_config(p, t_s));
    int turning_points = 0;
    for (std::size_t i = 2; i < traj.samples.size(); ++i) {
        if (traj.samples[i].t < t_s / 2) continue;
        const double a = traj.samples[i - 1].state.z - traj.samples[i - 2].state.z;
        const double b = traj.samples[i].state.z - traj.samples[i - 1].state.z;
        if (a * b < 0.0) ++turning_points;
    }
    CHECK(turning_points >= 2);
    CHECK(traj.back().state.z > -0.99);
}

} // TEST_SUITE
