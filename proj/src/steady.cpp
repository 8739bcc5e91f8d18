#include "molqca/steady.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "molqca/errors.hpp"

namespace molqca {

namespace {

// tanh(u) and sech^2(u) for u >= 0 without overflow.
struct Thermal {
    double tanh;
    double sech2;
};

Thermal thermal_factors(double r, double k_t) {
    if (k_t <= 0.0) {
        return {1.0, 0.0};
    }
    const double e = std::exp(-2.0 * r / k_t);
    return {(1.0 - e) / (1.0 + e), 4.0 * e / ((1.0 + e) * (1.0 + e))};
}

BlochState gibbs_image(const ModelParams& p, double delta, double z) {
    const GibbsMapValue g = gibbs_map(p, delta, z);
    return {g.x, 0.0, g.z};
}

double fixed_point_residual(const ModelParams& p, double delta, const BlochState& s) {
    return max_abs_difference(s, gibbs_image(p, delta, s.z));
}

SteadySolution finish(const ModelParams& p, double delta, const BlochState& s, int iterations,
                      bool converged, double tol) {
    SteadySolution out;
    out.state = s;
    out.iterations = iterations;
    out.residual = fixed_point_residual(p, delta, s);
    out.converged = converged && out.residual < tol;
    out.energy = expected_energy(s, hamiltonian_pauli(p, delta, s.z));
    out.map_slope = gibbs_map(p, delta, s.z).dz_dz;
    out.stable = std::abs(out.map_slope) < 1.0;
    return out;
}

SteadySolution solve_picard(const ModelParams& p, double delta, BlochState s, const SolverOptions& o) {
    const double alpha = o.mixing;
    for (int it = 1; it <= o.max_iter; ++it) {
        const BlochState g = gibbs_image(p, delta, s.z);
        const BlochState next{alpha * g.x + (1.0 - alpha) * s.x, 0.0, alpha * g.z + (1.0 - alpha) * s.z};
        const double change = max_abs_difference(next, s);
        s = next;
        if (change < o.tol * alpha) {
            return finish(p, delta, s, it, true, o.tol);
        }
    }
    return finish(p, delta, s, o.max_iter, false, o.tol);
}

SteadySolution solve_newton(const ModelParams& p, double delta, double z, const SolverOptions& o) {
    auto residual = [&](double zz) { return zz - gibbs_map(p, delta, zz).z; };
    for (int it = 1; it <= o.max_iter; ++it) {
        const GibbsMapValue g = gibbs_map(p, delta, z);
        const double r0 = z - g.z;
        const double slope = 1.0 - g.dz_dz;

        double candidate = g.z;
        bool accepted = false;
        if (std::abs(slope) > 1e-14) {
            double step = -r0 / slope;
            for (int halving = 0; halving < 40; ++halving) {
                const double zc = std::clamp(z + step, -1.0, 1.0);
                if (std::abs(residual(zc)) < std::abs(r0) || r0 == 0.0) {
                    candidate = zc;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        // Backtracking failed (|residual| has a local minimum here): take a plain map step.
        if (!accepted) {
            candidate = g.z;
        }
        const double change = std::abs(candidate - z);
        z = candidate;
        if (change < o.tol) {
            return finish(p, delta, gibbs_image(p, delta, z), it, true, o.tol);
        }
    }
    return finish(p, delta, gibbs_image(p, delta, z), o.max_iter, false, o.tol);
}

} // namespace

BlochState gibbs_state(const PauliForm& h, double k_t) {
    if (k_t < 0.0) {
        throw DomainError("k_t must be >= 0");
    }
    const double r = h.field.norm();
    if (r == 0.0) {
        return {};
    }
    // Populations p1, p2 ~ exp(-E_i/kT) on the eigenvectors; p1 - p2 = tanh(r / kT)
    // and the ground state points along -h on the Bloch sphere.
    const double population_difference = std::isinf(k_t) ? 0.0 : thermal_factors(r, k_t).tanh;
    return BlochState::from(-population_difference * h.field / r);
}

BlochState gibbs_state(const HamiltonianParts& h, double k_t) {
    return gibbs_state(h.total, k_t);
}

GibbsMapValue gibbs_map(const ModelParams& p, double delta, double z) {
    const double hz = 0.5 * delta - 0.5 * p.lambda * z;
    const double g2 = p.gamma * p.gamma;
    const double r = std::sqrt(g2 + hz * hz);
    const Thermal th = thermal_factors(r, p.k_t);
    GibbsMapValue out;
    out.x = th.tanh * p.gamma / r;
    out.z = -th.tanh * hz / r;
    const double thermal_term = p.k_t > 0.0 ? th.sech2 * hz * hz / (p.k_t * r * r) : 0.0;
    out.dz_dz = 0.5 * p.lambda * (thermal_term + th.tanh * g2 / (r * r * r));
    return out;
}

SteadySolution solve_self_consistent(const ModelParams& p, double delta, const BlochState& guess,
                                     const SolverOptions& options) {
    if (options.max_iter < 1 || !(options.tol > 0.0)) {
        throw DomainError("solver needs max_iter >= 1 and tol > 0");
    }
    if (!(options.mixing > 0.0 && options.mixing <= 1.0)) {
        throw DomainError("mixing factor must lie in (0, 1]");
    }
    const BlochState start{guess.x, 0.0, guess.z};
    if (std::hypot(start.x, start.z) > 1.0 + state_tolerance) {
        throw InvalidStateError("initial guess outside the unit disk");
    }
    if (options.method == FixedPointMethod::picard) {
        return solve_picard(p, delta, start, options);
    }
    return solve_newton(p, delta, start.z, options);
}

std::vector<BlochState> disk_samples(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<BlochState> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        const double radius = std::sqrt(unit());
        const double angle = 2.0 * units::pi * unit();
        out.push_back({radius * std::cos(angle), 0.0, radius * std::sin(angle)});
    }
    return out;
}

SolutionSet enumerate_steady_states(const ModelParams& p, double delta, int n_starts, std::uint64_t seed,
                                    const SolverOptions& options) {
    if (n_starts < 1) {
        throw DomainError("n_starts must be >= 1");
    }
    SolutionSet set;
    set.bias = delta;
    set.n_starts = n_starts;
    for (const BlochState& guess : disk_samples(n_starts, seed)) {
        SteadySolution sol = solve_self_consistent(p, delta, guess, options);
        if (!sol.converged) {
            ++set.unconverged;
            continue;
        }
        const bool seen = std::any_of(set.solutions.begin(), set.solutions.end(), [&](const SteadySolution& known) {
            return distance(known.state, sol.state) <= dedup_radius;
        });
        if (!seen) {
            set.solutions.push_back(sol);
        }
    }
    if (set.solutions.size() > max_distinct_solutions) {
        throw std::logic_error("more distinct steady states than the model allows");
    }
    std::sort(set.solutions.begin(), set.solutions.end(),
              [](const SteadySolution& a, const SteadySolution& b) { return a.state.z > b.state.z; });
    return set;
}

std::vector<SolutionSet> steady_polarization_curve(const ModelParams& p, std::span<const double> deltas,
                                                   int n_starts, std::uint64_t seed,
                                                   const SolverOptions& options) {
    if (deltas.empty()) {
        throw DomainError("bias list is empty");
    }
    std::vector<SolutionSet> out;
    out.reserve(deltas.size());
    for (double d : deltas) {
        out.push_back(enumerate_steady_states(p, d, n_starts, seed, options));
    }
    return out;
}

} // namespace molqca
