#pragma once

#include "fsd/geometry.hpp"
#include "fsd/params.hpp"
#include "fsd/plant.hpp"

namespace fsd {

enum class CtrlMode { PC, WIIC };

struct ControlCommand {
    double roll_d{0.0};
    double pitch_d{0.0};
    double yaw_d{0.0};
    double thrust{0.0};  // U_sigma, N
    int wing_state{0};
    CtrlMode mode{CtrlMode::PC};
    bool flag{false};          // WOEG output
    bool clamped{false};       // any limit hit on the delivered command
    bool wiic_infeasible{false};
};

// Cascade P-position / PID-velocity loop memory.
struct PidState {
    Vec3 integral{Vec3::Zero()};
    Vec3 prev_error{Vec3::Zero()};
    bool has_prev{false};
};

// Per-axis attitude-error integrals for the backstepping loop.
struct AttitudeCtlState {
    Vec3 integral{Vec3::Zero()};
};

// Position P -> velocity PID -> acceleration command (m/s^2). The reference
// velocity feeds forward into the inner-loop setpoint so a moving reference
// is tracked without a proportional lag.
Vec3 pc_position_loop(const DroneState& state, const Vec3& position_ref,
                      const Vec3& velocity_ref, PidState& pid,
                      const PositionGains& g, double dt);

struct AttitudeThrust {
    double roll_d;
    double pitch_d;
    double thrust;  // pre-clamp
    bool roll_saturated;
    bool pitch_saturated;
    bool thrust_saturated;
    bool thrust_indeterminate;  // U_sigma at/below floor, angles unreliable
};

// Acceleration command -> desired roll/pitch and total thrust (raw,
// saturation only flagged).
AttitudeThrust pc_attitude_thrust(const Vec3& a_cmd, const DroneState& state,
                                  const DroneParams& p, double thrust_eps);

// Wing benefit predicate: true when the predicted spread-wing force aids
// the desired translational motion.
bool woeg_flag(const Vec3& f_a_predicted, const Vec3& a_cmd,
               const DroneState& state, const DroneParams& p,
               const TwccParams& twcc);

enum class SaturatedAxis { Roll, Pitch };

// Saturation override: pins the saturated angle at its limit, spreads the
// wings and re-solves thrust with aerodynamic feedforward.
ControlCommand wiic_override(const Vec3& a_cmd, const Vec3& f_a_predicted,
                             const AttitudeThrust& pc_raw, SaturatedAxis axis,
                             double yaw_d, const DroneParams& p);

enum class EstimatorMode { None, FlatPlate, Parnn };

// One 10 Hz supervisory step. f_a_predicted is the estimator's spread-wing
// force at the current state (ignored when mode is None).
ControlCommand twcc_step(const DroneState& state, const Vec3& position_ref,
                         const Vec3& velocity_ref, const Vec3& accel_ref,
                         double yaw_ref, PidState& pid,
                         EstimatorMode estimator_mode, const Vec3& f_a_predicted,
                         const SimParams& sp, double dt);

// 300 Hz integral-backstepping attitude loop -> body torques.
Vec3 attitude_backstepping(const DroneState& state, const ControlCommand& cmd,
                           AttitudeCtlState& ctl, const DroneParams& p,
                           const AttitudeGains& g, double dt);

}  // namespace fsd
