#pragma once

#include "fsd/geometry.hpp"
#include "fsd/params.hpp"

namespace fsd {

struct DroneState {
    Vec3 position{Vec3::Zero()};   // world, m
    Vec3 velocity{Vec3::Zero()};   // world, m/s
    Mat3 attitude{Mat3::Identity()};  // body -> world
    Vec3 angular_velocity{Vec3::Zero()};  // body, rad/s
    int wing_state{0};             // 0 folded, 1 spread
    double time{0.0};

    EulerZyx euler() const { return euler_from_rotation(attitude); }
};

// Motor mixing per the vehicle geometry; built once from params.
class AllocationMatrix {
public:
    explicit AllocationMatrix(const DroneParams& p);

    const Mat4& mix() const { return t_; }
    const Mat4& unmix() const { return t_inv_; }

    // U = [U_sigma, U_phi, U_theta, U_psi] -> per-motor thrusts, clamped
    // to [0, motor_thrust_max]. Second return is true when clamping hit.
    struct Result {
        Vec4 forces;
        bool saturated;
    };
    Result allocate(const Vec4& u, const DroneParams& p) const;

private:
    Mat4 t_;
    Mat4 t_inv_;
};

// Cubic command->thrust map, clamped to [0, motor_thrust_max].
double command_to_thrust(double u_cmd, const DroneParams& p);
// Inverse of the map on [0,1] by bisection (input clamped to the
// achievable range first).
double thrust_to_command(double thrust, const DroneParams& p);
// Monotonicity check on [0,1]; throws ConfigError on failure.
void validate_thrust_poly(const DroneParams& p);

// World-frame plate normal n = R_wb * e3 (z heading down).
Vec3 body_normal(const Mat3& attitude);

struct AoaResult {
    double alpha;    // rad, signed, in [-pi/2, pi/2]
    bool low_speed;  // true when |v| <= v_eps; alpha forced to 0
};
AoaResult angle_of_attack(const Vec3& velocity, const Vec3& normal, double v_eps);

// Flat-plate aerodynamic force in the world frame. Zero when wings folded
// or below the low-speed cutoff.
Vec3 flat_plate_force(const DroneState& state, const DroneParams& p);

// Hidden ground-truth wing force (perturbed AOA, speed-dependent gain,
// tilted in-plane direction). Zero when wings folded.
Vec3 true_wing_force(const DroneState& state, const DroneParams& p,
                     const WingOracleParams& oracle);

// One RK4 step of the rigid-body dynamics. motor_forces are per-motor
// thrusts (N); torques in the body frame; f_a held constant over the step.
DroneState step_dynamics(const DroneState& state, const Vec4& motor_forces,
                         const Vec3& torques, const Vec3& f_a,
                         const DroneParams& p, double dt);

// Instantaneous translational acceleration for logging (Eq.-of-motion RHS).
Vec3 translational_accel(const DroneState& state, double total_thrust,
                         const Vec3& f_a, const DroneParams& p);

}  // namespace fsd
