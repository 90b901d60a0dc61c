#pragma once

#include "fsd/geometry.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace fsd {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Physical constants and actuator limits of the vehicle.
struct DroneParams {
    double mass{0.548};                              // kg
    Vec3 inertia_diag{3.22e-3, 4.68e-3, 7.72e-3};    // kg m^2
    double wing_area{0.06};                          // m^2
    double air_density{1.225};                       // kg/m^3
    double gravity{9.81};                            // m/s^2

    // Arm geometry (m) and propeller torque/thrust ratios.
    double d_fr{0.14};
    double d_br{0.14};
    double d_fp{0.10};
    double d_bp{0.10};
    double ct1{0.012};
    double ct2{0.012};

    double motor_thrust_max{3.5};                        // N per motor
    std::array<double, 4> thrust_poly{0.0, 1.2, 2.8, -1.5};  // command -> N

    double roll_max{30.0 * M_PI / 180.0};
    double pitch_max{30.0 * M_PI / 180.0};
    double thrust_min{0.0};
    double thrust_max{10.0};  // N total

    double v_eps{0.05};  // m/s, below which aero terms are zeroed

    Mat3 inertia() const { return inertia_diag.asDiagonal(); }
    void validate() const;
};

// Hidden ground-truth wing model. Only the plant reads this; the learner
// never sees these numbers.
struct WingOracleParams {
    double aoa_shift{0.25};    // delta
    double aoa_sharpness{2.0}; // kappa
    double gain0{1.4};         // gamma_0
    double gain1{1.6};         // gamma_1
};

struct PositionGains {
    Vec3 kp_pos{1.1, 1.1, 1.6};
    Vec3 kp_vel{2.2, 2.2, 3.0};
    Vec3 ki_vel{0.35, 0.35, 0.6};
    Vec3 kd_vel{0.05, 0.05, 0.05};
    double integral_limit{2.0};  // m/s^2 equivalent per axis
    // Bound on the position-feedback part of the velocity setpoint so a
    // large position error cannot demand runaway catch-up speeds.
    double catchup_speed_max{3.0};  // m/s
    // Downward-acceleration demand ceiling as a fraction of g; keeps the
    // thrust solve away from the zero-thrust singularity.
    double max_down_accel_frac{0.8};
};

struct AttitudeGains {
    Vec3 c1{12.0, 12.0, 8.0};
    Vec3 c2{16.0, 16.0, 10.0};
    Vec3 lambda{1.0, 1.0, 0.5};
    double integral_limit{0.5};  // rad s
    void validate() const;  // closed-loop eigenvalue check per axis
};

enum class WoegRule { DesiredForce, ThrustAxis };

struct TwccParams {
    double woeg_threshold{0.05};  // alignment margin
    double thrust_eps{0.1};       // N floor for angle extraction
    WoegRule woeg_rule{WoegRule::DesiredForce};
    // Once spread, wings stay spread at least this long so brief dips in the
    // saturation/benefit test mid-maneuver do not chatter the fold actuator.
    double wing_hold_time{0.5};  // s
};

struct PlannerParams {
    double fov_half_angle{15.0 * M_PI / 180.0};
    double sensing_range{5.0};     // R_d, m
    double accel_budget{9.0};      // m/s^2 for the avoidance cubic phase
    double cruise_accel_budget{3.0};  // m/s^2 for spin-up/goal-return ramps
    double min_cubic_duration{0.5};  // s
};

struct RateParams {
    double plant_dt{1.0 / 3000.0};
    int attitude_decimation{10};   // -> 300 Hz
    int position_decimation{300};  // -> 10 Hz
};

struct SimParams {
    DroneParams drone;
    WingOracleParams oracle;
    PositionGains pos_gains;
    AttitudeGains att_gains;
    TwccParams twcc;
    PlannerParams planner;
    RateParams rates;
    double sensor_noise_pos{0.0};  // std dev, m
    double sensor_noise_vel{0.0};  // std dev, m/s

    void validate() const;
};

// JSON round trip; load applies overrides on top of defaults.
std::string dump_params(const SimParams& p);
SimParams load_params(const std::string& path);
SimParams parse_params(const std::string& json_text);

}  // namespace fsd
