#include "fsd/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fsd {

std::optional<Obstacle> detect_obstacle(const DroneState& state,
                                        const std::vector<Obstacle>& obstacles,
                                        const PlannerParams& p) {
    const Eigen::Vector2d pos(state.position.x(), state.position.y());
    const Eigen::Vector2d vel(state.velocity.x(), state.velocity.y());
    if (vel.norm() < 1e-3) return std::nullopt;
    const double heading = std::atan2(vel.y(), vel.x());

    std::optional<Obstacle> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& ob : obstacles) {
        const Eigen::Vector2d rel = ob.center - pos;
        const double dist = rel.norm();
        if (dist > p.sensing_range || dist < 1e-9) continue;
        const double bearing = wrap_angle(std::atan2(rel.y(), rel.x()) - heading);
        if (std::abs(bearing) > p.fov_half_angle) continue;
        if (dist < best_dist) {
            best_dist = dist;
            best = ob;
        }
    }
    return best;
}

namespace {

// Position cubic with p(0)=p0, p'(0)=v0, p'(T)=vt, p''(T)=0.
Eigen::Vector4d cubic_coeffs(double p0, double v0, double vt, double T) {
    Eigen::Matrix4d a;
    Eigen::Vector4d rhs;
    a << 1, 0, 0, 0,
         0, 1, 0, 0,
         0, 1, 2 * T, 3 * T * T,
         0, 0, 2, 6 * T;
    rhs << p0, v0, vt, 0.0;
    return a.colPivHouseholderQr().solve(rhs);
}

}  // namespace

ReferenceTrajectory generate_avoidance(const DroneState& state, double steer_angle,
                                       double v_des, double t0, double alt_ref,
                                       const PlannerParams& p) {
    if (v_des <= 0.0) throw std::invalid_argument("generate_avoidance: v_des must be positive");

    const Eigen::Vector2d vel(state.velocity.x(), state.velocity.y());
    const double heading = (vel.norm() > 1e-6) ? std::atan2(vel.y(), vel.x()) : 0.0;
    const double new_heading = heading + steer_angle;
    const Vec3 v_target(v_des * std::cos(new_heading), v_des * std::sin(new_heading), 0.0);
    const Vec3 v0(state.velocity.x(), state.velocity.y(), 0.0);

    const double dv = (v_target - v0).norm();
    const double t1 = std::max(p.min_cubic_duration, 2.0 * dv / p.accel_budget);

    ReferenceTrajectory traj;
    traj.desired_speed = v_des;

    TrajectorySegment cubic;
    cubic.start_time = t0;
    cubic.duration = t1;
    cubic.coeffs.setZero();
    for (int axis = 0; axis < 2; ++axis) {
        const Eigen::Vector4d c =
            cubic_coeffs(state.position[axis], v0[axis], v_target[axis], t1);
        cubic.coeffs.row(axis) = c.transpose();
    }
    cubic.coeffs(2, 0) = alt_ref;  // altitude held
    traj.segments.push_back(cubic);

    // evaluate cubic end point for the linear phase start
    Vec3 end_pos;
    for (int axis = 0; axis < 3; ++axis) {
        const auto& c = cubic.coeffs.row(axis);
        end_pos[axis] = c[0] + t1 * (c[1] + t1 * (c[2] + t1 * c[3]));
    }

    TrajectorySegment linear;
    linear.start_time = t0 + t1;
    linear.duration = std::numeric_limits<double>::infinity();
    linear.coeffs.setZero();
    for (int axis = 0; axis < 3; ++axis) {
        linear.coeffs(axis, 0) = end_pos[axis];
        linear.coeffs(axis, 1) = v_target[axis];
    }
    traj.segments.push_back(linear);
    return traj;
}

ReferencePoint sample_reference(const ReferenceTrajectory& traj, double t) {
    if (traj.segments.empty())
        throw std::invalid_argument("sample_reference: empty trajectory");
    const TrajectorySegment* seg = &traj.segments.back();
    for (const auto& s : traj.segments) {
        if (t < s.start_time + s.duration) {
            seg = &s;
            break;
        }
    }
    const double tau = std::max(0.0, t - seg->start_time);
    ReferencePoint out;
    for (int axis = 0; axis < 3; ++axis) {
        const auto& c = seg->coeffs.row(axis);
        out.position[axis] = c[0] + tau * (c[1] + tau * (c[2] + tau * c[3]));
        out.velocity[axis] = c[1] + tau * (2.0 * c[2] + tau * 3.0 * c[3]);
        out.acceleration[axis] = 2.0 * c[2] + tau * 6.0 * c[3];
    }
    return out;
}

}  // namespace fsd
