#include "fsd/control.hpp"

#include <cmath>
#include <stdexcept>

namespace fsd {

Vec3 pc_position_loop(const DroneState& state, const Vec3& position_ref,
                      const Vec3& velocity_ref, PidState& pid,
                      const PositionGains& g, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("pc_position_loop: dt must be positive");
    if (!position_ref.allFinite() || !velocity_ref.allFinite() ||
        !state.position.allFinite() || !state.velocity.allFinite())
        throw std::invalid_argument("pc_position_loop: non-finite input");

    Vec3 catchup = g.kp_pos.cwiseProduct(position_ref - state.position);
    const double catchup_norm = catchup.norm();
    if (catchup_norm > g.catchup_speed_max)
        catchup *= g.catchup_speed_max / catchup_norm;
    const Vec3 v_d = velocity_ref + catchup;
    const Vec3 e = v_d - state.velocity;

    Vec3 de = Vec3::Zero();
    if (pid.has_prev) de = (e - pid.prev_error) / dt;

    // output uses the integral as of the previous step; update after
    const Vec3 a_cmd = g.kp_vel.cwiseProduct(e) + g.ki_vel.cwiseProduct(pid.integral) +
                       g.kd_vel.cwiseProduct(de);

    pid.integral += e * dt;
    for (int i = 0; i < 3; ++i) {
        const double lim = (g.ki_vel[i] > 0.0) ? g.integral_limit / g.ki_vel[i]
                                               : g.integral_limit;
        pid.integral[i] = std::clamp(pid.integral[i], -lim, lim);
    }
    pid.prev_error = e;
    pid.has_prev = true;
    return a_cmd;
}

AttitudeThrust pc_attitude_thrust(const Vec3& a_cmd, const DroneState& state,
                                  const DroneParams& p, double thrust_eps) {
    const EulerZyx e = state.euler();
    const double cc = std::cos(e.roll) * std::cos(e.pitch);
    AttitudeThrust out{};
    out.thrust = p.mass / cc * (p.gravity - a_cmd.z());
    out.thrust_saturated = out.thrust > p.thrust_max || out.thrust < p.thrust_min;
    if (out.thrust <= thrust_eps) {
        out.thrust_indeterminate = true;
        out.roll_d = 0.0;
        out.pitch_d = 0.0;
        return out;
    }
    out.pitch_d = -p.mass / out.thrust * a_cmd.x();
    out.roll_d = p.mass / out.thrust * a_cmd.y();
    out.roll_saturated = std::abs(out.roll_d) > p.roll_max;
    out.pitch_saturated = std::abs(out.pitch_d) > p.pitch_max;
    return out;
}

bool woeg_flag(const Vec3& f_a_predicted, const Vec3& a_cmd,
               const DroneState& state, const DroneParams& p,
               const TwccParams& twcc) {
    const double f_norm = f_a_predicted.norm();
    if (f_norm < 1e-9) return false;
    if (twcc.woeg_rule == WoegRule::ThrustAxis) {
        // aero augmenting the thrust axis: force aligned with -n
        const Vec3 n = body_normal(state.attitude);
        return f_a_predicted.dot(-n) > twcc.woeg_threshold * f_norm;
    }
    Vec3 u_des = p.mass * a_cmd;
    u_des.z() = 0.0;
    const double u_norm = u_des.norm();
    if (u_norm < 1e-9) return false;
    u_des /= u_norm;
    return f_a_predicted.dot(u_des) > twcc.woeg_threshold * f_norm;
}

ControlCommand wiic_override(const Vec3& a_cmd, const Vec3& f_a_predicted,
                             const AttitudeThrust& pc_raw, SaturatedAxis axis,
                             double yaw_d, const DroneParams& p) {
    ControlCommand cmd;
    cmd.mode = CtrlMode::WIIC;
    cmd.wing_state = 1;
    cmd.flag = true;
    cmd.yaw_d = yaw_d;

    const double ax = a_cmd.x() - f_a_predicted.x() / p.mass;
    const double ay = a_cmd.y() - f_a_predicted.y() / p.mass;

    // thrust beyond vertical balance at the pinned tilt only lifts the
    // vehicle off its altitude; cap the axis solve there and let the wing
    // drag supply the remainder of the horizontal demand
    auto vertical_cap = [&](double tilt) {
        const double denom = std::max(std::cos(tilt), 0.1);
        return (p.mass * (p.gravity - a_cmd.z()) + f_a_predicted.z()) / denom;
    };

    double thrust, roll_d, pitch_d;
    bool vert_capped = false;
    if (axis == SaturatedAxis::Pitch) {
        pitch_d = (pc_raw.pitch_d >= 0.0 ? 1.0 : -1.0) * p.pitch_max;
        thrust = -p.mass / pitch_d * ax;
        if (thrust <= 0.0) {
            // aero alone covers the demand; stay on PC-clamped angles
            cmd.wiic_infeasible = true;
            thrust = std::clamp(pc_raw.thrust, p.thrust_min, p.thrust_max);
            roll_d = std::clamp(pc_raw.roll_d, -p.roll_max, p.roll_max);
            cmd.pitch_d = pitch_d;
            cmd.roll_d = roll_d;
            cmd.thrust = thrust;
            cmd.clamped = true;
            return cmd;
        }
        const double cap = vertical_cap(pitch_d);
        if (cap > 0.0 && thrust > cap) {
            thrust = cap;
            vert_capped = true;
        }
        roll_d = p.mass / thrust * ay;
    } else {
        roll_d = (pc_raw.roll_d >= 0.0 ? 1.0 : -1.0) * p.roll_max;
        thrust = p.mass / roll_d * ay;
        if (thrust <= 0.0) {
            cmd.wiic_infeasible = true;
            thrust = std::clamp(pc_raw.thrust, p.thrust_min, p.thrust_max);
            pitch_d = std::clamp(pc_raw.pitch_d, -p.pitch_max, p.pitch_max);
            cmd.roll_d = roll_d;
            cmd.pitch_d = pitch_d;
            cmd.thrust = thrust;
            cmd.clamped = true;
            return cmd;
        }
        const double cap = vertical_cap(roll_d);
        if (cap > 0.0 && thrust > cap) {
            thrust = cap;
            vert_capped = true;
        }
        pitch_d = -p.mass / thrust * ax;
    }

    const double thrust_c = std::clamp(thrust, p.thrust_min, p.thrust_max);
    const double roll_c = std::clamp(roll_d, -p.roll_max, p.roll_max);
    const double pitch_c = std::clamp(pitch_d, -p.pitch_max, p.pitch_max);
    cmd.clamped = vert_capped || (thrust_c != thrust) || (roll_c != roll_d) ||
                  (pitch_c != pitch_d);
    cmd.thrust = thrust_c;
    cmd.roll_d = roll_c;
    cmd.pitch_d = pitch_c;
    return cmd;
}

ControlCommand twcc_step(const DroneState& state, const Vec3& position_ref,
                         const Vec3& velocity_ref, const Vec3& accel_ref,
                         double yaw_ref, PidState& pid,
                         EstimatorMode estimator_mode, const Vec3& f_a_predicted,
                         const SimParams& sp, double dt) {
    const DroneParams& p = sp.drone;
    // reference acceleration feeds forward so demanding maneuvers show up
    // in the command immediately instead of after velocity error builds
    Vec3 a_cmd =
        accel_ref +
        pc_position_loop(state, position_ref, velocity_ref, pid, sp.pos_gains, dt);
    // keep the thrust solve away from its zero crossing: never demand a
    // downward acceleration close to free fall
    a_cmd.z() = std::min(a_cmd.z(), sp.pos_gains.max_down_accel_frac * p.gravity);
    // with the wings already spread their force acts on the plant whichever
    // branch we take, so the thrust/attitude solve feeds it forward
    Vec3 a_pc = a_cmd;
    if (estimator_mode != EstimatorMode::None && state.wing_state == 1)
        a_pc -= f_a_predicted / p.mass;
    const AttitudeThrust raw = pc_attitude_thrust(a_pc, state, p, sp.twcc.thrust_eps);

    bool flag = false;
    if (estimator_mode != EstimatorMode::None)
        flag = woeg_flag(f_a_predicted, a_cmd, state, p, sp.twcc);

    const bool angle_saturated = raw.roll_saturated || raw.pitch_saturated;

    if (angle_saturated && flag) {
        const double roll_excess = std::abs(raw.roll_d) / p.roll_max;
        const double pitch_excess = std::abs(raw.pitch_d) / p.pitch_max;
        const SaturatedAxis axis = (pitch_excess >= roll_excess)
                                       ? SaturatedAxis::Pitch
                                       : SaturatedAxis::Roll;
        return wiic_override(a_cmd, f_a_predicted, raw, axis, yaw_ref, p);
    }

    ControlCommand cmd;
    cmd.mode = CtrlMode::PC;
    // the benefit test alone governs the fold actuator; saturation only
    // decides which solve produced the angles
    cmd.wing_state = flag ? 1 : 0;
    cmd.flag = flag;
    cmd.yaw_d = yaw_ref;
    cmd.roll_d = std::clamp(raw.roll_d, -p.roll_max, p.roll_max);
    cmd.pitch_d = std::clamp(raw.pitch_d, -p.pitch_max, p.pitch_max);
    cmd.thrust = std::clamp(raw.thrust, p.thrust_min, p.thrust_max);
    cmd.clamped = (cmd.roll_d != raw.roll_d) || (cmd.pitch_d != raw.pitch_d) ||
                  (cmd.thrust != raw.thrust);
    return cmd;
}

Vec3 attitude_backstepping(const DroneState& state, const ControlCommand& cmd,
                           AttitudeCtlState& ctl, const DroneParams& p,
                           const AttitudeGains& g, double dt) {
    const EulerZyx e = state.euler();
    const Vec3 angle(e.roll, e.pitch, e.yaw);
    const Vec3 angle_d(cmd.roll_d, cmd.pitch_d, cmd.yaw_d);
    const Vec3& w = state.angular_velocity;
    const Mat3 J = p.inertia();

    Vec3 torque;
    for (int i = 0; i < 3; ++i) {
        const double e1 = wrap_angle(angle_d[i] - angle[i]);
        const double chi = ctl.integral[i];
        // rate error with angle_rate_d = 0; body rates approximate Euler rates
        const double e2 = g.c1[i] * e1 + g.lambda[i] * chi - w[i];
        const double u = e1 * (1.0 - g.c1[i] * g.c1[i] + g.lambda[i]) +
                         e2 * (g.c1[i] + g.c2[i]) - g.c1[i] * g.lambda[i] * chi;
        torque[i] = J(i, i) * u;
        ctl.integral[i] = std::clamp(chi + e1 * dt,
                                     -g.integral_limit, g.integral_limit);
    }
    return torque + w.cross(J * w);
}

}  // namespace fsd
