#include "molqca/qmodel.hpp"

#include <algorithm>
#include <complex>
#include <string>

#include "molqca/errors.hpp"

namespace molqca {

namespace {
using cd = std::complex<double>;
constexpr double hermitian_tolerance = 1e-9;
} // namespace

void ModelParams::validate() const {
    if (!(std::isfinite(gamma) && gamma > 0.0)) {
        throw DomainError("gamma must be finite and > 0");
    }
    if (!(std::isfinite(lambda) && lambda >= 0.0)) {
        throw DomainError("lambda must be finite and >= 0");
    }
    if (!(t_d > 0.0)) {
        throw DomainError("t_d must be > 0 (or infinite)");
    }
    if (!(std::isfinite(k_t) && k_t >= 0.0)) {
        throw DomainError("k_t must be finite and >= 0");
    }
}

double distance(const BlochState& a, const BlochState& b) noexcept {
    return (a.vec() - b.vec()).norm();
}

double max_abs_difference(const BlochState& a, const BlochState& b) noexcept {
    return (a.vec() - b.vec()).cwiseAbs().maxCoeff();
}

void require_valid(const BlochState& s) {
    if (!(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z))) {
        throw InvalidStateError("Bloch vector has non-finite components");
    }
    if (s.norm() > 1.0 + state_tolerance) {
        throw InvalidStateError("Bloch vector norm " + std::to_string(s.norm()) + " exceeds 1");
    }
}

namespace pauli {
Matrix2c identity() { return Matrix2c::Identity(); }
Matrix2c sx() {
    Matrix2c m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}
Matrix2c sy() {
    Matrix2c m;
    m << 0.0, cd(0.0, -1.0), cd(0.0, 1.0), 0.0;
    return m;
}
Matrix2c sz() {
    Matrix2c m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}
} // namespace pauli

Matrix2c PauliForm::matrix() const {
    Matrix2c m;
    m << cd(c0 + field[2], 0.0), cd(field[0], -field[1]),
         cd(field[0], field[1]), cd(c0 - field[2], 0.0);
    return m;
}

PauliForm PauliForm::of(const Matrix2c& m) {
    PauliForm h;
    h.c0 = 0.5 * (m(0, 0).real() + m(1, 1).real());
    h.field[0] = 0.5 * (m(0, 1).real() + m(1, 0).real());
    h.field[1] = 0.5 * (m(1, 0).imag() - m(0, 1).imag());
    h.field[2] = 0.5 * (m(0, 0).real() - m(1, 1).real());
    return h;
}

namespace {

// Spinor for the Bloch direction n (unit vector), phase-fixed.
Vector2c spinor_along(const Vec3& n) {
    const double a = std::sqrt(std::max(0.0, 0.5 * (1.0 + n[2])));
    const double b = std::sqrt(std::max(0.0, 0.5 * (1.0 - n[2])));
    const double transverse = std::hypot(n[0], n[1]);
    Vector2c v;
    if (transverse > 0.0) {
        v << cd(a, 0.0), cd(n[0], n[1]) * (b / transverse);
    } else if (n[2] >= 0.0) {
        v << cd(1.0, 0.0), cd(0.0, 0.0);
    } else {
        v << cd(0.0, 0.0), cd(1.0, 0.0);
    }
    return v;
}

} // namespace

void eigen_decompose(const PauliForm& h, std::array<double, 2>& vals, std::array<Vector2c, 2>& vecs) {
    const double r = h.field.norm();
    vals = {h.c0 - r, h.c0 + r};
    // r == 0 only for a multiple of identity; pick the sigma_z basis.
    const Vec3 n = r > 0.0 ? Vec3(h.field / r) : Vec3(0.0, 0.0, 1.0);
    vecs[0] = spinor_along(-n);
    vecs[1] = spinor_along(n);
}

Matrix2c bloch_to_density(const BlochState& s) {
    require_valid(s);
    PauliForm f;
    f.c0 = 0.5;
    f.field = 0.5 * s.vec();
    return f.matrix();
}

BlochState density_to_bloch(const Matrix2c& rho) {
    const cd trace = rho.trace();
    if (std::abs(trace - 1.0) > hermitian_tolerance) {
        throw InvalidStateError("density operator trace is not 1");
    }
    const double asym = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (asym > hermitian_tolerance) {
        throw InvalidStateError("density operator is not Hermitian");
    }
    return {rho(0, 1).real() + rho(1, 0).real(),
            (rho(1, 0).imag() - rho(0, 1).imag()),
            rho(0, 0).real() - rho(1, 1).real()};
}

HamiltonianParts build_hamiltonian(const ModelParams& p, double delta, double z) {
    if (!(std::abs(z) <= 1.0 + state_tolerance)) {
        throw InvalidStateError("polarization outside [-1, 1]");
    }
    HamiltonianParts h;
    h.h_e = -p.gamma * pauli::sx() + 0.5 * delta * (pauli::sz() + pauli::identity());
    h.h_el = -0.5 * p.lambda * z * pauli::sz();
    h.h_l = 0.5 * (0.5 * p.lambda) * z * z * pauli::identity();
    h.h_total = h.h_e + h.h_el + h.h_l;
    h.total = hamiltonian_pauli(p, delta, z);
    eigen_decompose(h.total, h.eigvals, h.eigvecs);
    return h;
}

OnsiteEnergies onsite_energies(const HamiltonianParts& h) noexcept {
    return {h.h_total(0, 0).real(), h.h_total(1, 1).real()};
}

double expected_energy(const BlochState& s, const PauliForm& h) noexcept {
    return h.c0 + h.field.dot(s.vec());
}

double expected_energy(const BlochState& s, const HamiltonianParts& h) noexcept {
    return expected_energy(s, h.total);
}

} // namespace molqca
