#pragma once

// Self-consistent thermal steady states rho = exp(-H(rho)/kT) / Tr(...) and
// multistart enumeration of coexisting solutions.

#include <cstdint>
#include <span>
#include <vector>

#include "molqca/qmodel.hpp"

namespace molqca {

/// Solutions closer than this (Euclidean Bloch distance) are the same solution.
inline constexpr double dedup_radius = 0.02;

/// Upper bound on distinct solutions; the model never shows more than 3.
inline constexpr std::size_t max_distinct_solutions = 8;

enum class FixedPointMethod {
    picard,  ///< s <- alpha * Gibbs(H(s)) + (1 - alpha) * s
    newton,  ///< Newton on z - GibbsZ(z) with backtracking; also reaches unstable roots
};

struct SolverOptions {
    int max_iter = 10'000;
    double tol = 1e-10;
    FixedPointMethod method = FixedPointMethod::newton;
    double mixing = 1.0;  ///< alpha in (0, 1], Picard only
};

struct SteadySolution {
    BlochState state;    ///< y == 0
    double energy = 0.0; ///< <E> = Tr(rho H(rho))
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;     ///< ||s - Gibbs(H(s))||_inf
    double map_slope = 0.0;    ///< dGibbsZ/dz at the solution
    bool stable = false;       ///< |map_slope| < 1
};

struct SolutionSet {
    std::vector<SteadySolution> solutions;  ///< sorted by z descending
    double bias = 0.0;
    int n_starts = 0;
    int unconverged = 0;
};

/// Gibbs state of a fixed Hamiltonian. k_t == 0 gives the ground-state projector.
BlochState gibbs_state(const HamiltonianParts& h, double k_t);
BlochState gibbs_state(const PauliForm& h, double k_t);

/// z-component of Gibbs(H(delta, z)) and its derivative with respect to z.
struct GibbsMapValue {
    double x;
    double z;
    double dz_dz;
};
GibbsMapValue gibbs_map(const ModelParams& p, double delta, double z);

SteadySolution solve_self_consistent(const ModelParams& p, double delta, const BlochState& guess,
                                     const SolverOptions& options = {});

SolutionSet enumerate_steady_states(const ModelParams& p, double delta, int n_starts,
                                    std::uint64_t seed, const SolverOptions& options = {});

std::vector<SolutionSet> steady_polarization_curve(const ModelParams& p, std::span<const double> deltas,
                                                   int n_starts, std::uint64_t seed,
                                                   const SolverOptions& options = {});

/// Uniform sample on the (x, z) unit disk (y = 0). Bit-reproducible for a given seed.
std::vector<BlochState> disk_samples(int count, std::uint64_t seed);

} // namespace molqca
