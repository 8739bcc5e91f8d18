#pragma once

// Two-state (double-dot) cell: state representation, Hamiltonian assembly and
// basic observables.
//
// Units: energies in units of the tunneling energy gamma, times in units of
// T_gamma = pi * hbar / gamma. In these units hbar = 1 / pi.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Core>

namespace molqca {

using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;
using Vec3 = Eigen::Vector3d;

namespace units {
inline constexpr double pi = std::numbers::pi;
/// Reduced Planck constant in gamma * T_gamma.
inline constexpr double hbar = 1.0 / pi;
/// Dissipation time of an isolated system.
inline constexpr double infinite_time = std::numeric_limits<double>::infinity();
} // namespace units

/// Bloch-norm slack accepted as a valid state.
inline constexpr double state_tolerance = 1e-9;

struct ModelParams {
    double gamma = 1.0;                  ///< tunneling energy
    double lambda = 0.0;                 ///< reorganization energy
    double t_d = units::infinite_time;   ///< dissipation time; infinite means isolated
    double k_t = 0.0;                    ///< bath thermal energy k_B T

    bool isolated() const noexcept { return std::isinf(t_d); }

    /// Throws DomainError naming the offending field.
    void validate() const;

    bool operator==(const ModelParams&) const = default;
};

/// Density operator as (<sx>, <sy>, <sz>). z is the polarization P.
struct BlochState {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 vec() const noexcept { return {x, y, z}; }
    static BlochState from(const Vec3& v) noexcept { return {v[0], v[1], v[2]}; }

    double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
    double polarization() const noexcept { return z; }

    bool operator==(const BlochState&) const = default;
};

double distance(const BlochState& a, const BlochState& b) noexcept;
double max_abs_difference(const BlochState& a, const BlochState& b) noexcept;

/// Throws InvalidStateError when |s| > 1 + state_tolerance or a component is not finite.
void require_valid(const BlochState& s);

/// Real Pauli coefficients of a 2x2 Hermitian operator: c0*I + field . sigma.
struct PauliForm {
    double c0 = 0.0;
    Vec3 field = Vec3::Zero();

    Matrix2c matrix() const;
    static PauliForm of(const Matrix2c& m);
};

namespace pauli {
Matrix2c identity();
Matrix2c sx();
Matrix2c sy();
Matrix2c sz();
} // namespace pauli

struct HamiltonianParts {
    Matrix2c h_e;        ///< electronic part
    Matrix2c h_el;       ///< electron-ligand coupling
    Matrix2c h_l;        ///< ligand energy (multiple of identity)
    Matrix2c h_total;
    PauliForm total;     ///< h_total in Pauli form
    std::array<double, 2> eigvals{};    ///< E1 <= E2
    std::array<Vector2c, 2> eigvecs{};  ///< |u1>, |u2>

    double gap() const noexcept { return eigvals[1] - eigvals[0]; }
};

/// Closed-form eigen-decomposition of c0*I + h.sigma. Each eigenvector has a
/// real non-negative first component (real positive second component if the
/// first vanishes).
void eigen_decompose(const PauliForm& h, std::array<double, 2>& vals, std::array<Vector2c, 2>& vecs);

Matrix2c bloch_to_density(const BlochState& s);
BlochState density_to_bloch(const Matrix2c& rho);

/// Pauli coefficients of the full nonlinear Hamiltonian at bias delta and <sz> = z.
/// Hot-path version of build_hamiltonian without matrices or eigenvectors.
inline PauliForm hamiltonian_pauli(const ModelParams& p, double delta, double z) noexcept {
    PauliForm h;
    h.c0 = 0.5 * delta + 0.25 * p.lambda * z * z;
    h.field = Vec3(-p.gamma, 0.0, 0.5 * delta - 0.5 * p.lambda * z);
    return h;
}

HamiltonianParts build_hamiltonian(const ModelParams& p, double delta, double z);

struct OnsiteEnergies {
    double left;
    double right;
};

OnsiteEnergies onsite_energies(const HamiltonianParts& h) noexcept;

/// Tr(rho H).
double expected_energy(const BlochState& s, const HamiltonianParts& h) noexcept;
double expected_energy(const BlochState& s, const PauliForm& h) noexcept;

} // namespace molqca
