#pragma once

#include "fsd/control.hpp"
#include "fsd/dataset.hpp"
#include "fsd/planner.hpp"
#include "fsd/rnn.hpp"
#include "fsd/trainer.hpp"

#include <cstdint>
#include <deque>
#include <limits>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fsd {

// Spread-wing force predictor used by WOEG/WIIC. Keeps the 10-step state
// history the recurrent model needs.
class AeroEstimator {
public:
    AeroEstimator() = default;
    explicit AeroEstimator(EstimatorMode mode) : mode_(mode) {}
    AeroEstimator(RnnModel model, const DroneParams& p)
        : mode_(EstimatorMode::Parnn), model_(std::move(model)) { (void)p; }

    EstimatorMode mode() const { return mode_; }
    void push_state(const DroneState& state);  // call once per 10 Hz tick
    Vec3 estimate(const DroneState& state, const DroneParams& p) const;
    void reset() { history_.clear(); }

private:
    EstimatorMode mode_{EstimatorMode::None};
    RnnModel model_;
    std::deque<VecX> history_;
};

enum class Outcome { Completed, Collided, Diverged, TimedOut };

struct TraceRow {
    double t;
    Vec3 r, v;
    EulerZyx euler;
    Vec3 omega;
    Vec3 r_d, v_d;
    double roll_d, pitch_d, thrust;
    CtrlMode mode;
    int wing_state;
    bool flag;
    Vec3 f_a_hat;
    Vec3 f_a_true;
};

struct RunRecord {
    std::vector<TraceRow> trace;  // 10 Hz
    Outcome outcome{Outcome::Completed};
    std::optional<Eigen::Vector2d> collision_point;
    double travel_distance{0.0};  // max horizontal distance from start
    double tracking_rmse{0.0};
    // closest approach to any obstacle surface (forest runs; +inf otherwise)
    double min_clearance{std::numeric_limits<double>::infinity()};
    FlightLog log;  // dataset-schema log of the same run
};

double tracking_rmse(const RunRecord& record);

struct ForestConfig {
    double extent{400.0};          // square side, m
    double grid_pitch{12.0};       // m; jitter keeps spacing in [10.5, 13.5]
    double jitter{0.75};           // m per axis
    double obstacle_radius{0.5};
    double drone_radius{0.25};
    double clear_radius{6.0};      // keep-out around the start point
};

std::vector<Obstacle> make_forest(const ForestConfig& cfg, std::uint64_t seed);
std::uint64_t layout_hash(const std::vector<Obstacle>& obstacles);

struct ScenarioConfig {
    enum class Kind { SteeringSweep, Forest, DataCollection, Hover };
    Kind kind{Kind::Forest};
    std::uint64_t seed{1};
    double v_des{7.0};
    EstimatorMode controller{EstimatorMode::None};
    int trials{21};
    double time_cap{180.0};
    ForestConfig forest;
    std::vector<double> steering_angles_deg{110, 115, 120, 125, 130};
    double steer_sign{1.0};
    std::string model_path;  // required for parnn
    // steering sweep: straight run-in before the commanded steer
    double steer_trigger_time{6.0};
    double steer_settle_time{6.0};
    // forest behaviour
    double hold_after_avoid{0.3};  // s of straight flight before re-aiming at goal
    bool return_to_goal{true};
    // dodge magnitude drawn per encounter, degrees; the sign steers away from
    // the detected tree's bearing side (drawn only on near-zero bearings)
    double avoid_angle_min_deg{60.0};
    double avoid_angle_max_deg{100.0};
    // dodges brake to this fraction of cruise speed; the return leg restores it
    double avoid_exit_speed_frac{0.5};
    // surface distance at which a tree overrides the re-plan lockout
    double emergency_range{5.0};
    // divergence guards
    double max_alt_error{20.0};
    double max_tilt{80.0 * M_PI / 180.0};
};

// Closed-loop run on an explicit obstacle field until a stop condition.
RunRecord run_trial(const ScenarioConfig& scenario, int trial_index,
                    const SimParams& sp, const AeroEstimator& estimator);

// Steering maneuver without obstacles: run-in, one commanded steer, settle.
RunRecord run_steering(double steer_angle_rad, const ScenarioConfig& scenario,
                       std::uint64_t seed, const SimParams& sp,
                       const AeroEstimator& estimator);

struct ControllerSummary {
    std::string name;
    double success_rate{0.0};
    double mean_travel_distance{0.0};
    double rmse_mean{0.0};
    std::vector<double> rmse_per_trial;
    std::vector<std::string> outcomes;
};

struct BatchResult {
    std::vector<ControllerSummary> controllers;
};

BatchResult run_batch(const ScenarioConfig& scenario,
                      const std::vector<EstimatorMode>& controllers,
                      const SimParams& sp, const std::string& out_dir,
                      bool write_traces = true);

// Random-maneuver data collection with wings forced spread.
struct CollectConfig {
    double duration{600.0};       // s per log
    std::uint64_t seed{7};
    double max_speed{8.0};        // setpoint envelope
    double min_setpoint_hold{1.0};
    double max_setpoint_hold{3.0};
    double tilt_limit{55.0 * M_PI / 180.0};  // widened for excitation
    double accel_noise{0.0};      // additive Gaussian on logged accel
};

FlightLog collect_training_flight(const CollectConfig& cfg, const SimParams& sp);

void write_trace_csv(const RunRecord& rec, const std::string& path);
void write_summary_json(const BatchResult& batch, const std::string& path);

}  // namespace fsd
