#pragma once

#include "fsd/geometry.hpp"
#include "fsd/params.hpp"
#include "fsd/plant.hpp"

#include <optional>
#include <vector>

namespace fsd {

struct Obstacle {
    Eigen::Vector2d center{0.0, 0.0};  // x, y (m)
    double radius{0.5};
};

// Piecewise-polynomial reference, C1 at segment boundaries. The final
// segment is linear and extrapolates indefinitely.
struct TrajectorySegment {
    double start_time{0.0};
    double duration{0.0};
    // coeffs(axis, k): position = sum_k c_k * (t - start)^k, degree <= 3
    Eigen::Matrix<double, 3, 4> coeffs;
};

struct ReferenceTrajectory {
    std::vector<TrajectorySegment> segments;
    double desired_speed{0.0};
};

// Nearest obstacle within sensing range and the forward field of view.
std::optional<Obstacle> detect_obstacle(const DroneState& state,
                                        const std::vector<Obstacle>& obstacles,
                                        const PlannerParams& p);

// Avoidance reference: cubic blend to speed v_des along the steered
// heading, then constant velocity. Altitude held at alt_ref.
ReferenceTrajectory generate_avoidance(const DroneState& state, double steer_angle,
                                       double v_des, double t0, double alt_ref,
                                       const PlannerParams& p);

struct ReferencePoint {
    Vec3 position;
    Vec3 velocity;
    Vec3 acceleration;
};

ReferencePoint sample_reference(const ReferenceTrajectory& traj, double t);

}  // namespace fsd
