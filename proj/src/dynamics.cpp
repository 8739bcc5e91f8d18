#include "molqca/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Geometry>

#include "molqca/errors.hpp"

namespace molqca {

void IntegratorConfig::validate() const {
    if (!(dt_max > 0.0)) throw DomainError("dt_max must be > 0");
    if (!(rel_tol > 0.0)) throw DomainError("rel_tol must be > 0");
    if (!(abs_tol > 0.0)) throw DomainError("abs_tol must be > 0");
    if (record_stride < 1) throw DomainError("record_stride must be >= 1");
    if (!(dt_min > 0.0 && dt_min < dt_max)) throw DomainError("dt_min must lie in (0, dt_max)");
}

IntegratorConfig default_integrator_config(const ModelParams& p, double t_s) {
    IntegratorConfig cfg;
    cfg.dt_max = 1.0 / 20.0;
    if (!p.isolated()) {
        cfg.dt_max = std::min(cfg.dt_max, p.t_d / 20.0);
    } else {
        cfg.rel_tol = 1e-12;
        cfg.abs_tol = 1e-14;
    }
    if (t_s > 0.0 && std::isfinite(t_s)) cfg.dt_max = std::min(cfg.dt_max, t_s / 1000.0);
    cfg.dt_min = std::min(cfg.dt_min, 1e-3 * cfg.dt_max);
    return cfg;
}

std::pair<Matrix2c, Matrix2c> lindblad_ops(const HamiltonianParts& h, double t_d, double k_t) {
    if (std::isinf(t_d)) {
        return {Matrix2c::Zero(), Matrix2c::Zero()};
    }
    const double amplitude = std::sqrt(1.0 / t_d);
    const Vector2c& u1 = h.eigvecs[0];
    const Vector2c& u2 = h.eigvecs[1];
    Matrix2c l1 = amplitude * (u1 * u2.adjoint());
    Matrix2c l2 = Matrix2c::Zero();
    if (k_t > 0.0) {
        l2 = amplitude * std::exp(-h.gap() / (2.0 * k_t)) * (u2 * u1.adjoint());
    }
    return {l1, l2};
}

Matrix2c dissipator(const BlochState& s, const HamiltonianParts& h, double t_d, double k_t) {
    const Matrix2c rho = bloch_to_density(s);
    const auto [l1, l2] = lindblad_ops(h, t_d, k_t);
    Matrix2c d = Matrix2c::Zero();
    for (const Matrix2c* l : {&l1, &l2}) {
        const Matrix2c ldl = l->adjoint() * (*l);
        d += (*l) * rho * l->adjoint() - 0.5 * (ldl * rho + rho * ldl);
    }
    return d;
}

Vec3 dissipator_bloch(const Vec3& s, const PauliForm& h, double t_d, double k_t) noexcept {
    if (std::isinf(t_d)) {
        return Vec3::Zero();
    }
    const double r = h.field.norm();
    // Ground state direction on the Bloch sphere.
    const Vec3 m = r > 0.0 ? Vec3(-h.field / r) : Vec3(0.0, 0.0, -1.0);
    const double down = 1.0 / t_d;
    const double up = k_t > 0.0 ? std::exp(-2.0 * r / k_t) / t_d : 0.0;
    const double along = s.dot(m);
    // Longitudinal populations relax at down + up, coherences at half that.
    return ((down - up) - (down + up) * along) * m - 0.5 * (down + up) * (s - along * m);
}

Flow evaluate_flow(const Vec3& s, double delta, double d_delta_dt, const ModelParams& p) noexcept {
    Flow f;
    f.delta = delta;
    f.d_delta_dt = d_delta_dt;
    f.h = hamiltonian_pauli(p, delta, s[2]);
    f.dissipator = dissipator_bloch(s, f.h, p.t_d, p.k_t);
    // d rho/dt = -i/hbar [H, rho]  ->  ds/dt = (2/hbar) h x s
    f.ds_dt = (2.0 / units::hbar) * f.h.field.cross(s) + f.dissipator;
    return f;
}

Vec3 derivative(const BlochState& s, double t, const BiasWaveform& w, const ModelParams& p) {
    const BiasValue b = w.eval(t);
    return evaluate_flow(s.vec(), b.delta, b.d_delta_dt, p).ds_dt;
}

namespace {

// Bloch vector plus the running integrals of p_switch and p_work.
using StateVec = Eigen::Matrix<double, 5, 1>;

struct Drive {
    double t0;
    double delta0;
    double slope;
    double at(double t) const noexcept { return delta0 + slope * (t - t0); }
};

struct Eval {
    StateVec f;
    Flow flow;
};

Eval rhs(double t, const StateVec& y, const Drive& drive, const ModelParams& p) noexcept {
    const Vec3 s = y.head<3>();
    Eval e;
    e.flow = evaluate_flow(s, drive.at(t), drive.slope, p);
    e.f.head<3>() = e.flow.ds_dt;
    e.f[3] = -e.flow.h.field.dot(e.flow.dissipator);
    e.f[4] = 0.5 * drive.slope * (1.0 + s[2]);
    return e;
}

// Dormand-Prince 5(4) tableau.
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
} // namespace dp

class Stepper {
public:
    Stepper(const ModelParams& p, const IntegratorConfig& cfg, const Vec3& s0)
        : p_(p), cfg_(cfg), h_(cfg.dt_max), initial_norm_(s0.norm()) {
        y_.setZero();
        y_.head<3>() = s0;
        stats.max_norm = initial_norm_;
        stats.min_step = cfg.dt_max;
    }

    const StateVec& y() const noexcept { return y_; }
    const Eval& current() const noexcept { return k1_; }

    // Integrate from t0 to t1 under a linear drive. on_accept(t, last_in_span) is
    // called after every accepted step and may return true to stop early.
    template <class OnAccept>
    double advance(double t0, double t1, const Drive& drive, OnAccept&& on_accept) {
        double t = t0;
        k1_ = rhs(t, y_, drive, p_);
        bool rejected_last = false;
        while (t < t1) {
            const double remaining = t1 - t;
            double h = std::min({h_, cfg_.dt_max, remaining});
            bool last = h >= remaining * (1.0 - 1e-12);
            if (last) h = remaining;

            const StateVec& y = y_;
            const StateVec& k1 = k1_.f;
            const StateVec k2 = rhs(t + dp::c2 * h, y + h * dp::a21 * k1, drive, p_).f;
            const StateVec k3 = rhs(t + dp::c3 * h, y + h * (dp::a31 * k1 + dp::a32 * k2), drive, p_).f;
            const StateVec k4 =
                rhs(t + dp::c4 * h, y + h * (dp::a41 * k1 + dp::a42 * k2 + dp::a43 * k3), drive, p_).f;
            const StateVec k5 = rhs(t + dp::c5 * h,
                                    y + h * (dp::a51 * k1 + dp::a52 * k2 + dp::a53 * k3 + dp::a54 * k4),
                                    drive, p_).f;
            const StateVec k6 =
                rhs(t + h, y + h * (dp::a61 * k1 + dp::a62 * k2 + dp::a63 * k3 + dp::a64 * k4 + dp::a65 * k5),
                    drive, p_).f;
            const StateVec y5 =
                y + h * (dp::b1 * k1 + dp::b3 * k3 + dp::b4 * k4 + dp::b5 * k5 + dp::b6 * k6);
            const double t_new = last ? t1 : t + h;
            Eval k7 = rhs(t_new, y5, drive, p_);

            const StateVec err_vec =
                h * (dp::e1 * k1 + dp::e3 * k3 + dp::e4 * k4 + dp::e5 * k5 + dp::e6 * k6 + dp::e7 * k7.f);
            const StateVec scale =
                (cfg_.abs_tol + cfg_.rel_tol * y.cwiseAbs().cwiseMax(y5.cwiseAbs()).array()).matrix();
            const double err = std::sqrt((err_vec.cwiseQuotient(scale)).squaredNorm() / 5.0);

            if (!(err <= 1.0)) {
                ++stats.rejected_steps;
                const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
                h_ = h * fac;
                rejected_last = true;
                if (h_ < cfg_.dt_min) {
                    std::ostringstream msg;
                    msg << "step size underflow at t = " << t << " (dt = " << h_ << ", state = [" << y[0]
                        << ", " << y[1] << ", " << y[2] << "])";
                    throw StiffnessError(msg.str(), t, h_);
                }
                continue;
            }

            ++stats.accepted_steps;
            stats.min_step = std::min(stats.min_step, h);
            t = t_new;
            y_ = y5;
            k1_ = std::move(k7);

            const double norm = y_.head<3>().norm();
            stats.max_norm = std::max(stats.max_norm, norm);
            stats.max_norm_drift = std::max(stats.max_norm_drift, std::abs(norm - initial_norm_));
            if (norm > 1.0 + state_tolerance) {
                ++stats.clip_events;
                y_.head<3>() /= norm;
                k1_ = rhs(t, y_, drive, p_);
            }

            double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            fac = std::clamp(fac, 0.2, 5.0);
            if (rejected_last) fac = std::min(fac, 1.0);
            rejected_last = false;
            // Keep the controller's proposal when the step was shortened only to land on t1.
            if (!last || h >= h_) h_ = h * fac;

            if (on_accept(t, last)) return t;
        }
        return t;
    }

    IntegrationStats stats;

private:
    const ModelParams& p_;
    IntegratorConfig cfg_;
    double h_;
    double initial_norm_;
    StateVec y_;
    Eval k1_;
};

TrajectorySample make_sample(double t, const StateVec& y, const Eval& e, double lambda) {
    TrajectorySample s;
    s.t = t;
    s.delta = e.flow.delta;
    s.state = BlochState::from(y.head<3>());
    const PauliForm& h = e.flow.h;
    const double r = h.field.norm();
    s.e_expected = expected_energy(s.state, h);
    s.e1 = h.c0 - r;
    s.e2 = h.c0 + r;
    s.p_switch = e.f[3];
    s.p_work = e.f[4];
    const double zdot_z = e.flow.ds_dt[2] * s.state.z;
    s.p3 = -(0.5 * lambda) * zdot_z;
    s.p4 = (0.5 * lambda) * zdot_z;
    s.e_switch = y[3];
    s.e_work = y[4];
    return s;
}

} // namespace

Trajectory integrate(const BlochState& s0, const BiasWaveform& w, const ModelParams& p,
                     const IntegratorConfig& cfg) {
    require_valid(s0);
    p.validate();
    cfg.validate();
    if (w.empty()) {
        throw DomainError("cannot integrate over an empty waveform");
    }

    Trajectory traj;
    Stepper stepper(p, cfg, s0.vec());
    std::size_t since_record = 0;

    for (std::size_t i = 0; i < w.size(); ++i) {
        const Segment& seg = w.segments()[i];
        const double t0 = w.segment_start(i);
        const double t1 = w.segment_start(i + 1);
        const Drive drive{t0, seg.delta_start, seg.slope()};
        if (i == 0) {
            const Eval e0 = rhs(t0, stepper.y(), drive, p);
            traj.samples.push_back(make_sample(t0, stepper.y(), e0, p.lambda));
        }
        stepper.advance(t0, t1, drive, [&](double t, bool last) {
            if (++since_record >= cfg.record_stride || last) {
                traj.samples.push_back(make_sample(t, stepper.y(), stepper.current(), p.lambda));
                since_record = 0;
            }
            return false;
        });
    }
    traj.stats = stepper.stats;
    return traj;
}

RelaxResult relax_to_equilibrium(const BlochState& s0, double delta, const ModelParams& p,
                                 const IntegratorConfig& cfg, double t_max) {
    require_valid(s0);
    p.validate();
    cfg.validate();
    if (p.isolated()) {
        throw DomainError("relaxation needs a finite dissipation time");
    }
    if (!(t_max > 0.0)) {
        throw DomainError("t_max must be > 0");
    }
    const Drive drive{0.0, delta, 0.0};
    if (evaluate_flow(s0.vec(), delta, 0.0, p).ds_dt.norm() < relax_rate_threshold) {
        return {s0, 0.0, true};
    }
    Stepper stepper(p, cfg, s0.vec());
    bool converged = false;
    const double elapsed = stepper.advance(0.0, t_max, drive, [&](double, bool) {
        converged = stepper.current().flow.ds_dt.norm() < relax_rate_threshold;
        return converged;
    });
    return {BlochState::from(stepper.y().head<3>()), elapsed, converged};
}

} // namespace molqca
