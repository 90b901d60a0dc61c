#include "fsd/plant.hpp"

#include "fsd/aero.hpp"

#include <cmath>
#include <stdexcept>

namespace fsd {

AllocationMatrix::AllocationMatrix(const DroneParams& p) {
    // Row 3 uses d_fp in the last column (symmetric front-pitch arms).
    t_ << 1.0,     1.0,     1.0,      1.0,
          p.d_fr,  p.d_br, -p.d_br,  -p.d_fr,
          p.d_fp, -p.d_bp, -p.d_bp,   p.d_fp,
         -p.ct1,   p.ct2,  -p.ct1,    p.ct2;
    Eigen::FullPivLU<Mat4> lu(t_);
    if (!lu.isInvertible())
        throw ConfigError("allocation matrix is singular for this geometry");
    t_inv_ = lu.inverse();
}

AllocationMatrix::Result AllocationMatrix::allocate(const Vec4& u,
                                                    const DroneParams& p) const {
    Vec4 f = t_inv_ * u;
    bool saturated = false;
    for (int i = 0; i < 4; ++i) {
        const double clamped = std::clamp(f[i], 0.0, p.motor_thrust_max);
        if (clamped != f[i]) saturated = true;
        f[i] = clamped;
    }
    return {f, saturated};
}

double command_to_thrust(double u_cmd, const DroneParams& p) {
    const auto& c = p.thrust_poly;
    const double f = c[0] + u_cmd * (c[1] + u_cmd * (c[2] + u_cmd * c[3]));
    return std::clamp(f, 0.0, p.motor_thrust_max);
}

void validate_thrust_poly(const DroneParams& p) {
    double prev = command_to_thrust(0.0, p);
    for (int i = 1; i <= 200; ++i) {
        const double f = command_to_thrust(i / 200.0, p);
        if (f < prev - 1e-12)
            throw ConfigError("thrust polynomial is not monotone on [0,1]");
        prev = f;
    }
}

double thrust_to_command(double thrust, const DroneParams& p) {
    const double lo_f = command_to_thrust(0.0, p);
    const double hi_f = command_to_thrust(1.0, p);
    if (thrust <= lo_f) return 0.0;
    if (thrust >= hi_f) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (command_to_thrust(mid, p) < thrust ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Vec3 body_normal(const Mat3& attitude) {
    return attitude.col(2);
}

AoaResult angle_of_attack(const Vec3& velocity, const Vec3& normal, double v_eps) {
    const double speed = velocity.norm();
    if (speed <= v_eps) return {0.0, true};
    const double s = std::clamp(velocity.dot(normal) / speed, -1.0, 1.0);
    return {std::asin(s), false};
}

Vec3 flat_plate_force(const DroneState& state, const DroneParams& p) {
    if (state.wing_state == 0) return Vec3::Zero();
    const Vec3 n = body_normal(state.attitude);
    const auto aoa = angle_of_attack(state.velocity, n, p.v_eps);
    if (aoa.low_speed) return Vec3::Zero();
    const double v2 = state.velocity.squaredNorm();
    return -p.air_density * std::sin(aoa.alpha) * p.wing_area * v2 * n;
}

Vec3 true_wing_force(const DroneState& state, const DroneParams& p,
                     const WingOracleParams& oracle) {
    if (state.wing_state == 0) return Vec3::Zero();
    const Vec3 n = body_normal(state.attitude);
    const auto aoa = angle_of_attack(state.velocity, n, p.v_eps);
    if (aoa.low_speed) return Vec3::Zero();
    const double speed = state.velocity.norm();
    const double alpha_w = oracle.aoa_shift * std::tanh(oracle.aoa_sharpness * aoa.alpha);
    const double gamma = oracle.gain0 + oracle.gain1 * speed / (1.0 + speed);
    return reconstruct_force(alpha_w, gamma, state.velocity, state.attitude, p).force;
}

namespace {

struct Deriv {
    Vec3 dr, dv;
    Mat3 dR;
    Vec3 dw;
};

Deriv dynamics_rhs(const Vec3& v, const Mat3& R, const Vec3& w,
                   double total_thrust, const Vec3& torques, const Vec3& f_a,
                   const DroneParams& p) {
    Deriv d;
    d.dr = v;
    const Vec3 thrust_body(0.0, 0.0, -total_thrust);
    d.dv = p.gravity * Vec3::UnitZ() + (R * thrust_body) / p.mass + f_a / p.mass;
    d.dR = R * skew(w);
    const Mat3 J = p.inertia();
    d.dw = J.inverse() * (-w.cross(J * w) + torques);
    return d;
}

}  // namespace

Vec3 translational_accel(const DroneState& state, double total_thrust,
                         const Vec3& f_a, const DroneParams& p) {
    const Vec3 thrust_body(0.0, 0.0, -total_thrust);
    return p.gravity * Vec3::UnitZ() + (state.attitude * thrust_body) / p.mass +
           f_a / p.mass;
}

DroneState step_dynamics(const DroneState& state, const Vec4& motor_forces,
                         const Vec3& torques, const Vec3& f_a,
                         const DroneParams& p, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("step_dynamics: dt must be positive");
    if (!state.position.allFinite() || !state.velocity.allFinite() ||
        !state.attitude.allFinite() || !state.angular_velocity.allFinite() ||
        !motor_forces.allFinite() || !torques.allFinite() || !f_a.allFinite())
        throw std::invalid_argument("step_dynamics: non-finite input");

    const double total_thrust = motor_forces.sum();

    auto rhs = [&](const Vec3& v, const Mat3& R, const Vec3& w) {
        return dynamics_rhs(v, R, w, total_thrust, torques, f_a, p);
    };

    const Vec3& r0 = state.position;
    const Vec3& v0 = state.velocity;
    const Mat3& R0 = state.attitude;
    const Vec3& w0 = state.angular_velocity;

    const Deriv k1 = rhs(v0, R0, w0);
    const Deriv k2 = rhs(v0 + 0.5 * dt * k1.dv, R0 + 0.5 * dt * k1.dR,
                         w0 + 0.5 * dt * k1.dw);
    const Deriv k3 = rhs(v0 + 0.5 * dt * k2.dv, R0 + 0.5 * dt * k2.dR,
                         w0 + 0.5 * dt * k2.dw);
    const Deriv k4 = rhs(v0 + dt * k3.dv, R0 + dt * k3.dR, w0 + dt * k3.dw);

    DroneState out = state;
    out.position = r0 + dt / 6.0 * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
    out.velocity = v0 + dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    out.attitude = orthonormalize(
        R0 + dt / 6.0 * (k1.dR + 2.0 * k2.dR + 2.0 * k3.dR + k4.dR));
    out.angular_velocity =
        w0 + dt / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
    out.time = state.time + dt;
    return out;
}

}  // namespace fsd
