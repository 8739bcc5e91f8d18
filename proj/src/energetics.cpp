#include "molqca/energetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "molqca/errors.hpp"
#include "molqca/steady.hpp"

namespace molqca {

namespace {

constexpr int reference_starts = 64;
constexpr std::uint64_t reference_seed = 0x5eed;

} // namespace

PowerChannels power_channels(const BlochState& s, const Vec3& ds_dt, const HamiltonianParts& h,
                             double d_delta_dt, const ModelParams& p) {
    const Vec3 d = dissipator_bloch(s.vec(), h.total, p.t_d, p.k_t);
    PowerChannels out;
    // Tr(D H) = d . h for D = d.sigma / 2.
    out.p_switch = -h.total.field.dot(d);
    out.p_work = 0.5 * d_delta_dt * (1.0 + s.z);
    const double zdot_z = ds_dt[2] * s.z;
    out.p3 = -(0.5 * p.lambda) * zdot_z;
    out.p4 = (0.5 * p.lambda) * zdot_z;
    out.p_total = -out.p_switch + out.p_work;
    return out;
}

double adiabaticity_beta(const ModelParams& p, double t_s, double delta_i, double delta_f) {
    const double range = std::abs(delta_f - delta_i);
    if (!(range > 0.0)) {
        throw DomainError("adiabaticity parameter needs a non-zero sweep range");
    }
    if (!(t_s > 0.0)) {
        throw DomainError("switching time must be > 0");
    }
    return 2.0 * units::pi * p.gamma * p.gamma * t_s / (units::hbar * range);
}

double excess_energy_isolated(const Trajectory& traj, const ModelParams& p, GroundReference ref) {
    const TrajectorySample& last = traj.back();
    if (ref == GroundReference::realized_state) {
        return last.e_expected - last.e1;
    }
    ModelParams cold = p;
    cold.k_t = 0.0;
    cold.t_d = units::infinite_time;
    const SolutionSet set = enumerate_steady_states(cold, last.delta, reference_starts, reference_seed);
    double ground = std::numeric_limits<double>::infinity();
    for (const SteadySolution& s : set.solutions) {
        const PauliForm h = hamiltonian_pauli(cold, last.delta, s.state.z);
        ground = std::min(ground, h.c0 - h.field.norm());
    }
    if (!std::isfinite(ground)) {
        throw std::runtime_error("no self-consistent ground state found");
    }
    return last.e_expected - ground;
}

double excess_energy_open(const BlochState& final_state, const ModelParams& p, double delta_final) {
    const SolutionSet set = enumerate_steady_states(p, delta_final, reference_starts, reference_seed);
    const SteadySolution* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const SteadySolution& s : set.solutions) {
        if (!s.stable) continue;
        const double d = distance(s.state, final_state);
        if (d < best) {
            best = d;
            nearest = &s;
        }
    }
    if (nearest == nullptr) {
        throw std::runtime_error("no stable steady state found at the final bias");
    }
    const double e_final = expected_energy(final_state, hamiltonian_pauli(p, delta_final, final_state.z));
    return e_final - nearest->energy;
}

DissipationReport dissipation_report(const Trajectory& traj, const ModelParams& p, double delta_initial,
                                     double delta_final) {
    DissipationReport r;
    r.e_switch = traj.back().e_switch - traj.front().e_switch;
    r.e_excess = excess_energy_open(traj.back().state, p, delta_final);
    r.e_diss = r.e_switch + r.e_excess;
    r.beta = adiabaticity_beta(p, traj.back().t - traj.front().t, delta_initial, delta_final);
    return r;
}

double trapezoid_switch_energy(const Trajectory& traj) {
    double sum = 0.0;
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        const TrajectorySample& a = traj.samples[i - 1];
        const TrajectorySample& b = traj.samples[i];
        sum += 0.5 * (a.p_switch + b.p_switch) * (b.t - a.t);
    }
    return sum;
}

double energy_balance_residual(const Trajectory& traj) {
    const TrajectorySample& a = traj.front();
    const TrajectorySample& b = traj.back();
    const double stored = b.e_expected - a.e_expected;
    const double supplied = (b.e_work - a.e_work) - (b.e_switch - a.e_switch);
    return stored - supplied;
}

} // namespace molqca
