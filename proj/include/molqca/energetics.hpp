#pragma once

// Power flow and energy bookkeeping for a switching event.

#include "molqca/dynamics.hpp"
#include "molqca/qmodel.hpp"

namespace molqca {

/// Powers in gamma / T_gamma.
struct PowerChannels {
    double p_total = 0.0;
    double p_work = 0.0;    ///< Tr(rho dH_E/dt), work done by the bias
    double p_switch = 0.0;  ///< -Tr(D[rho] H), power flowing into the bath
    double p3 = 0.0;        ///< electron-ligand term
    double p4 = 0.0;        ///< ligand term, equal and opposite to p3
};

PowerChannels power_channels(const BlochState& s, const Vec3& ds_dt, const HamiltonianParts& h,
                             double d_delta_dt, const ModelParams& p);

/// beta = 2 pi gamma^2 T_s / (hbar |delta_f - delta_i|).
double adiabaticity_beta(const ModelParams& p, double t_s, double delta_i, double delta_f);

enum class GroundReference {
    realized_state,    ///< E1 of H evaluated at the final <sz>
    self_consistent,   ///< E1 of the lowest-energy zero-temperature self-consistent H
};

/// <E>(T_s) - E1(T_s) of an isolated run.
double excess_energy_isolated(const Trajectory& traj, const ModelParams& p,
                              GroundReference ref = GroundReference::realized_state);

/// <E> of the final state minus <E> of the nearest stable steady state at delta_final.
double excess_energy_open(const BlochState& final_state, const ModelParams& p, double delta_final);

struct DissipationReport {
    double e_switch = 0.0;
    double e_excess = 0.0;
    double e_diss = 0.0;
    double beta = 0.0;
};

/// E_switch is taken from the integrator's running integral of p_switch.
DissipationReport dissipation_report(const Trajectory& traj, const ModelParams& p, double delta_initial,
                                     double delta_final);

/// Trapezoidal integral of p_switch over the recorded samples.
double trapezoid_switch_energy(const Trajectory& traj);

/// (<E>(end) - <E>(start)) - (integral of p_work - integral of p_switch).
double energy_balance_residual(const Trajectory& traj);

} // namespace molqca
