#pragma once

// Time evolution of the nonlinear Lindblad equation on the Bloch vector.
//
// The Hamiltonian depends on the instantaneous <sz>, and the two thermal jump
// operators are built on its instantaneous eigenbasis, so both are rebuilt at
// every right-hand-side evaluation.

#include <cstddef>
#include <utility>
#include <vector>

#include "molqca/qmodel.hpp"
#include "molqca/waveforms.hpp"

namespace molqca {

struct IntegratorConfig {
    double dt_max = 0.05;       ///< step cap, T_gamma
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    std::size_t record_stride = 1;  ///< keep every n-th accepted step (segment ends are always kept)
    double dt_min = 1e-12;      ///< below this the step controller gives up

    void validate() const;
    bool operator==(const IntegratorConfig&) const = default;
};

/// dt_max = min(T_gamma / 20, T_d / 20, T_s / 1000). Isolated runs tighten the
/// tolerances to rel 1e-12, abs 1e-14 so the Bloch norm stays within 1e-8.
IntegratorConfig default_integrator_config(const ModelParams& p, double t_s);

struct TrajectorySample {
    double t = 0.0;
    double delta = 0.0;
    BlochState state;
    double e_expected = 0.0;
    double e1 = 0.0;
    double e2 = 0.0;
    double p_work = 0.0;
    double p_switch = 0.0;
    double p3 = 0.0;
    double p4 = 0.0;
    double e_switch = 0.0;  ///< integral of p_switch since t = 0
    double e_work = 0.0;    ///< integral of p_work since t = 0
};

struct IntegrationStats {
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t clip_events = 0;   ///< steps whose Bloch norm exceeded 1 + state_tolerance
    double max_norm = 0.0;         ///< largest Bloch norm seen before clipping
    double max_norm_drift = 0.0;   ///< max | |s| - |s0| | over accepted steps
    double min_step = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    IntegrationStats stats;

    const TrajectorySample& front() const { return samples.front(); }
    const TrajectorySample& back() const { return samples.back(); }
};

/// Full right-hand side at one instant.
struct Flow {
    Vec3 ds_dt;
    Vec3 dissipator;   ///< Bloch image of D[rho]
    PauliForm h;       ///< H(delta, z)
    double delta = 0.0;
    double d_delta_dt = 0.0;
};

/// Thermal jump operators on the eigenbasis of h: L1 = |u1><u2| / sqrt(T_d),
/// L2 = exp(-(E2 - E1) / 2kT) |u2><u1| / sqrt(T_d). Both vanish for infinite T_d.
std::pair<Matrix2c, Matrix2c> lindblad_ops(const HamiltonianParts& h, double t_d, double k_t);

/// sum_k L rho L^dag - {L^dag L, rho} / 2, built from lindblad_ops by matrix arithmetic.
Matrix2c dissipator(const BlochState& s, const HamiltonianParts& h, double t_d, double k_t);

/// Bloch-vector image of the dissipator in closed form.
Vec3 dissipator_bloch(const Vec3& s, const PauliForm& h, double t_d, double k_t) noexcept;

Flow evaluate_flow(const Vec3& s, double delta, double d_delta_dt, const ModelParams& p) noexcept;

/// ds/dt at time t under waveform w.
Vec3 derivative(const BlochState& s, double t, const BiasWaveform& w, const ModelParams& p);

/// Adaptive Dormand-Prince 5(4) integration over the whole waveform. Segment
/// joins are hit exactly. Throws StiffnessError if the step collapses.
Trajectory integrate(const BlochState& s0, const BiasWaveform& w, const ModelParams& p,
                     const IntegratorConfig& cfg);

struct RelaxResult {
    BlochState state;
    double elapsed = 0.0;
    bool converged = false;
};

/// Integrate at constant bias until |ds/dt| < 1e-10 / T_gamma or t_max elapses.
RelaxResult relax_to_equilibrium(const BlochState& s0, double delta, const ModelParams& p,
                                 const IntegratorConfig& cfg, double t_max);

inline constexpr double relax_rate_threshold = 1e-10;

} // namespace molqca
