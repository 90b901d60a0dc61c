#include "fsd/sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <random>
#include <unordered_map>

namespace fsd {

using nlohmann::json;

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t idx) {
    // splitmix64 over seed ^ index
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (idx + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

VecX estimator_input(const DroneState& state, const DroneParams& p) {
    VecX x(8);
    const EulerZyx e = state.euler();
    const auto aoa = angle_of_attack(state.velocity, body_normal(state.attitude), p.v_eps);
    x << state.velocity.x(), state.velocity.y(), state.velocity.z(), e.roll,
        e.pitch, e.yaw, state.velocity.norm(), aoa.alpha;
    return x;
}

}  // namespace

void AeroEstimator::push_state(const DroneState& state) {
    if (mode_ != EstimatorMode::Parnn) return;
    DroneParams p;  // only v_eps is used for the AOA input feature
    history_.push_back(estimator_input(state, p));
    while (history_.size() > 10) history_.pop_front();
}

Vec3 AeroEstimator::estimate(const DroneState& state, const DroneParams& p) const {
    switch (mode_) {
        case EstimatorMode::None:
            return Vec3::Zero();
        case EstimatorMode::FlatPlate: {
            DroneState spread = state;
            spread.wing_state = 1;
            return flat_plate_force(spread, p);
        }
        case EstimatorMode::Parnn: {
            if (history_.empty()) return Vec3::Zero();
            std::vector<VecX> seq;
            seq.reserve(10);
            // pad a short history by repeating the oldest entry
            for (std::size_t i = history_.size(); i < 10; ++i)
                seq.push_back(history_.front());
            for (const auto& x : history_) seq.push_back(x);
            const VecX out = rnn_forward(model_, seq);
            const double alpha_w = out[0];
            const double gamma = gamma_from_raw(out[1], model_.gamma_floor);
            return reconstruct_force(alpha_w, gamma, state.velocity, state.attitude, p)
                .force;
        }
    }
    return Vec3::Zero();
}

double tracking_rmse(const RunRecord& record) {
    if (record.trace.empty()) throw std::runtime_error("tracking_rmse: empty record");
    double total = 0.0;
    for (const auto& row : record.trace)
        total += (row.r - row.r_d).squaredNorm();
    return std::sqrt(total / static_cast<double>(record.trace.size()));
}

std::vector<Obstacle> make_forest(const ForestConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    // the lattice is rotated per layout so no straight flight line (goal
    // heading or dodge exit) can skim along a row of trees
    std::uniform_real_distribution<double> rot(8.0 * M_PI / 180.0,
                                               20.0 * M_PI / 180.0);
    std::uniform_real_distribution<double> jit(-cfg.jitter, cfg.jitter);
    const double theta = rot(rng);
    const double c = std::cos(theta), s = std::sin(theta);
    std::vector<Obstacle> out;
    const double reach = std::hypot(cfg.extent, cfg.extent / 2.0) + cfg.grid_pitch;
    const int n = static_cast<int>(reach / cfg.grid_pitch) + 1;
    for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
            const double gx = i * cfg.grid_pitch + jit(rng);
            const double gy = j * cfg.grid_pitch + jit(rng);
            Obstacle ob;
            ob.center = Eigen::Vector2d(c * gx - s * gy, s * gx + c * gy);
            ob.radius = cfg.obstacle_radius;
            if (ob.center.x() < 0.0 || ob.center.x() > cfg.extent) continue;
            if (std::abs(ob.center.y()) > cfg.extent / 2.0) continue;
            if (ob.center.norm() < cfg.clear_radius) continue;
            out.push_back(ob);
        }
    }
    return out;
}

std::uint64_t layout_hash(const std::vector<Obstacle>& obstacles) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a over raw coordinate bytes
    auto feed = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (const auto& ob : obstacles) {
        feed(ob.center.x());
        feed(ob.center.y());
        feed(ob.radius);
    }
    return h;
}

namespace {

// Uniform grid over obstacle centers for cheap collision queries.
class ObstacleIndex {
public:
    ObstacleIndex(const std::vector<Obstacle>& obstacles, double cell)
        : obstacles_(obstacles), cell_(cell) {
        for (std::size_t i = 0; i < obstacles.size(); ++i)
            cells_[key(obstacles[i].center)].push_back(i);
    }

    // surface distance to the closest obstacle in the 3x3 cell neighbourhood
    double surface_distance(const Eigen::Vector2d& pos) const {
        const long cx = static_cast<long>(std::floor(pos.x() / cell_));
        const long cy = static_cast<long>(std::floor(pos.y() / cell_));
        double best = std::numeric_limits<double>::infinity();
        for (long dx = -1; dx <= 1; ++dx) {
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = cells_.find((cx + dx) * 1000003 + (cy + dy));
                if (it == cells_.end()) continue;
                for (std::size_t i : it->second) {
                    const Obstacle& ob = obstacles_[i];
                    best = std::min(best, (ob.center - pos).norm() - ob.radius);
                }
            }
        }
        return best;
    }

    const Obstacle* hit(const Eigen::Vector2d& pos, double margin) const {
        const long cx = static_cast<long>(std::floor(pos.x() / cell_));
        const long cy = static_cast<long>(std::floor(pos.y() / cell_));
        for (long dx = -1; dx <= 1; ++dx) {
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = cells_.find((cx + dx) * 1000003 + (cy + dy));
                if (it == cells_.end()) continue;
                for (std::size_t i : it->second) {
                    const Obstacle& ob = obstacles_[i];
                    if ((ob.center - pos).norm() < ob.radius + margin) return &ob;
                }
            }
        }
        return nullptr;
    }

private:
    long key(const Eigen::Vector2d& p) const {
        return static_cast<long>(std::floor(p.x() / cell_)) * 1000003 +
               static_cast<long>(std::floor(p.y() / cell_));
    }
    const std::vector<Obstacle>& obstacles_;
    double cell_;
    std::unordered_map<long, std::vector<std::size_t>> cells_;
};

struct LoopHooks {
    // called at every 10 Hz tick before sampling the reference
    std::function<void(const DroneState& sensed, double t,
                       ReferenceTrajectory& traj, double& yaw_ref)>
        on_tick;
    // called at attitude rate; first terminal outcome wins
    std::function<std::optional<Outcome>(const DroneState& state, double t)>
        stop_check;
    // overrides the wing state decided by TWCC (data collection)
    bool force_wings_spread{false};
};

RunRecord run_closed_loop(const SimParams& sp, const AeroEstimator& estimator_proto,
                          ReferenceTrajectory traj, const DroneState& start,
                          double time_cap, const LoopHooks& hooks,
                          std::uint64_t noise_seed) {
    const DroneParams& p = sp.drone;
    validate_thrust_poly(p);
    const AllocationMatrix alloc(p);

    DroneState state = start;
    PidState pid;
    AttitudeCtlState att;
    AeroEstimator estimator = estimator_proto;
    estimator.reset();

    std::mt19937_64 noise_rng(noise_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const bool noisy = sp.sensor_noise_pos > 0.0 || sp.sensor_noise_vel > 0.0;

    RunRecord rec;
    rec.outcome = Outcome::TimedOut;

    const double dt = sp.rates.plant_dt;
    const int att_dec = sp.rates.attitude_decimation;
    const int pos_dec = sp.rates.position_decimation;
    const double dt10 = dt * pos_dec;
    const long n_steps = static_cast<long>(std::llround(time_cap / dt));

    double yaw_ref = 0.0;
    const int wing_hold_ticks =
        static_cast<int>(std::llround(sp.twcc.wing_hold_time / dt10));
    int wing_hold = 0;
    ControlCommand cmd;
    cmd.thrust = p.mass * p.gravity;
    Vec4 motor_forces = Vec4::Constant(cmd.thrust / 4.0);
    Vec3 torques = Vec3::Zero();
    Vec3 f_a_hat = Vec3::Zero();

    const Eigen::Vector2d start_xy(start.position.x(), start.position.y());
    Vec3 r_d = start.position, v_d = Vec3::Zero();

    for (long step = 0; step < n_steps; ++step) {
        const double t = state.time;

        if (step % pos_dec == 0) {
            DroneState sensed = state;
            if (noisy) {
                for (int i = 0; i < 3; ++i) {
                    sensed.position[i] += sp.sensor_noise_pos * gauss(noise_rng);
                    sensed.velocity[i] += sp.sensor_noise_vel * gauss(noise_rng);
                }
            }
            if (hooks.on_tick) hooks.on_tick(sensed, t, traj, yaw_ref);
            const ReferencePoint ref = sample_reference(traj, t);
            r_d = ref.position;
            v_d = ref.velocity;

            estimator.push_state(sensed);
            f_a_hat = estimator.estimate(sensed, p);
            cmd = twcc_step(sensed, ref.position, ref.velocity, ref.acceleration,
                            yaw_ref, pid, estimator.mode(), f_a_hat, sp, dt10);
            if (cmd.wing_state == 1) {
                wing_hold = wing_hold_ticks;
            } else if (wing_hold > 0) {
                cmd.wing_state = 1;
                --wing_hold;
            }
            if (hooks.force_wings_spread) cmd.wing_state = 1;
            state.wing_state = cmd.wing_state;
        }

        if (step % att_dec == 0) {
            const double dt_att = dt * att_dec;
            torques = attitude_backstepping(state, cmd, att, p, sp.att_gains, dt_att);
            const Vec4 u(cmd.thrust, torques.x(), torques.y(), torques.z());
            Vec4 desired = alloc.allocate(u, p).forces;
            // PWM abstraction: desired thrust -> command -> realized thrust
            for (int i = 0; i < 4; ++i)
                motor_forces[i] = command_to_thrust(thrust_to_command(desired[i], p), p);
        }

        const Vec3 f_a = true_wing_force(state, p, sp.oracle);

        if (step % pos_dec == 0) {
            // log after the actuator update so realized thrust is current
            const Vec4 u_real = alloc.mix() * motor_forces;
            TraceRow row;
            row.t = t;
            row.r = state.position;
            row.v = state.velocity;
            row.euler = state.euler();
            row.omega = state.angular_velocity;
            row.r_d = r_d;
            row.v_d = v_d;
            row.roll_d = cmd.roll_d;
            row.pitch_d = cmd.pitch_d;
            row.thrust = cmd.thrust;
            row.mode = cmd.mode;
            row.wing_state = state.wing_state;
            row.flag = cmd.flag;
            row.f_a_hat = f_a_hat;
            row.f_a_true = f_a;
            rec.trace.push_back(row);

            LogStep ls;
            ls.t = t;
            ls.velocity = state.velocity;
            ls.euler = row.euler;
            ls.accel = translational_accel(state, u_real[0], f_a, p);
            ls.thrust = u_real[0];
            ls.wing_state = state.wing_state;
            rec.log.push_back(ls);
        }

        const Vec4 u_real = alloc.mix() * motor_forces;
        state = step_dynamics(state, motor_forces, u_real.tail<3>(), f_a, p, dt);

        const Eigen::Vector2d xy(state.position.x(), state.position.y());
        rec.travel_distance = std::max(rec.travel_distance, (xy - start_xy).norm());

        if (hooks.stop_check && step % att_dec == 0) {
            if (auto outcome = hooks.stop_check(state, state.time)) {
                rec.outcome = *outcome;
                if (rec.outcome == Outcome::Collided)
                    rec.collision_point = xy;
                break;
            }
        }
    }

    if (!rec.trace.empty()) rec.tracking_rmse = tracking_rmse(rec);
    return rec;
}

ReferenceTrajectory initial_cruise(const DroneState& start, double heading,
                                   double v_des, double alt_ref,
                                   const PlannerParams& pp) {
    // from rest the velocity heading defaults to zero, so the steer angle
    // is the absolute heading; cruise ramps use the gentler budget so the
    // reference stays trackable without wing assistance
    PlannerParams cruise = pp;
    cruise.accel_budget = pp.cruise_accel_budget;
    return generate_avoidance(start, heading, v_des, start.time, alt_ref, cruise);
}

}  // namespace

RunRecord run_trial(const ScenarioConfig& scenario, int trial_index,
                    const SimParams& sp, const AeroEstimator& estimator) {
    const std::uint64_t trial_seed = mix_seed(scenario.seed, trial_index);
    const auto obstacles = make_forest(scenario.forest, trial_seed);
    const ObstacleIndex index(obstacles, scenario.forest.grid_pitch);

    // steering draws fixed per encounter index so they pair across controllers
    std::mt19937_64 steer_rng(mix_seed(trial_seed, 0x5744ull));
    std::uniform_real_distribution<double> mag(
        scenario.avoid_angle_min_deg * M_PI / 180.0,
        scenario.avoid_angle_max_deg * M_PI / 180.0);
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<double> steer_draws;
    for (int k = 0; k < 256; ++k)
        steer_draws.push_back(mag(steer_rng) * (coin(steer_rng) == 0 ? 1.0 : -1.0));

    const double alt_ref = -5.0;
    DroneState start;
    start.position = Vec3(0.0, 0.0, alt_ref);

    struct PlanState {
        double lockout_until{0.0};
        bool aimed_at_goal{true};
        int encounters{0};
        Eigen::Vector2d dodging{1e9, 1e9};  // tree the active dodge clears
    };
    auto plan = std::make_shared<PlanState>();

    LoopHooks hooks;
    hooks.on_tick = [&, plan](const DroneState& sensed, double t,
                              ReferenceTrajectory& traj, double& yaw_ref) {
        (void)yaw_ref;
        const auto detected = detect_obstacle(sensed, obstacles, sp.planner);
        if (t < plan->lockout_until) {
            // the lockout keeps the dodge from re-triggering on the tree it
            // is already clearing, but a different tree closing inside the
            // emergency radius still overrides it
            if (!detected) return;
            if ((detected->center - plan->dodging).norm() < 1e-9) return;
            const Eigen::Vector2d xy(sensed.position.x(), sensed.position.y());
            const double dist = (detected->center - xy).norm() - detected->radius;
            if (dist > scenario.emergency_range) return;
        }
        if (detected) {
            double steer = steer_draws[plan->encounters % steer_draws.size()];
            ++plan->encounters;
            // dodge away from the tree's side; the drawn sign only breaks
            // the tie for a dead-ahead tree
            const Eigen::Vector2d xy(sensed.position.x(), sensed.position.y());
            const Eigen::Vector2d vel(sensed.velocity.x(), sensed.velocity.y());
            if (vel.norm() > 1e-6) {
                const Eigen::Vector2d rel = detected->center - xy;
                const double cross = vel.x() * rel.y() - vel.y() * rel.x();
                const double bearing = std::asin(
                    std::clamp(cross / (vel.norm() * rel.norm()), -1.0, 1.0));
                if (std::abs(bearing) > 2.0 * M_PI / 180.0)
                    steer = -std::copysign(std::abs(steer), bearing);
            }
            traj = generate_avoidance(sensed, steer,
                                      scenario.avoid_exit_speed_frac * scenario.v_des,
                                      t, alt_ref, sp.planner);
            plan->lockout_until =
                t + traj.segments.front().duration + scenario.hold_after_avoid;
            plan->aimed_at_goal = false;
            plan->dodging = detected->center;
            return;
        }
        if (scenario.return_to_goal && !plan->aimed_at_goal) {
            const Eigen::Vector2d vel(sensed.velocity.x(), sensed.velocity.y());
            if (vel.norm() < 1e-3) return;
            const double heading = std::atan2(vel.y(), vel.x());
            const double steer = wrap_angle(0.0 - heading);  // goal heading +x
            // gentle ramp: detection stays active during the return, so the
            // correction does not need the aggressive avoidance budget
            PlannerParams cruise = sp.planner;
            cruise.accel_budget = sp.planner.cruise_accel_budget;
            traj = generate_avoidance(sensed, steer, scenario.v_des, t, alt_ref,
                                      cruise);
            plan->aimed_at_goal = true;
        }
    };

    const double margin = scenario.forest.drone_radius;
    auto min_clear = std::make_shared<double>(std::numeric_limits<double>::infinity());
    hooks.stop_check = [&, min_clear](const DroneState& state,
                                      double) -> std::optional<Outcome> {
        const Eigen::Vector2d xy(state.position.x(), state.position.y());
        *min_clear = std::min(*min_clear, index.surface_distance(xy));
        if (index.hit(xy, margin)) return Outcome::Collided;
        if (state.position.x() >= scenario.forest.extent) return Outcome::Completed;
        if (std::abs(state.position.z() - alt_ref) > scenario.max_alt_error)
            return Outcome::Diverged;
        const double tilt = std::acos(std::clamp(state.attitude(2, 2), -1.0, 1.0));
        if (tilt > scenario.max_tilt) return Outcome::Diverged;
        return std::nullopt;
    };

    ReferenceTrajectory traj =
        initial_cruise(start, 0.0, scenario.v_des, alt_ref, sp.planner);
    RunRecord rec = run_closed_loop(sp, estimator, traj, start, scenario.time_cap,
                                    hooks, mix_seed(trial_seed, 0xa0));
    rec.min_clearance = *min_clear;
    return rec;
}

RunRecord run_steering(double steer_angle_rad, const ScenarioConfig& scenario,
                       std::uint64_t seed, const SimParams& sp,
                       const AeroEstimator& estimator) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);

    const double alt_ref = -5.0;
    DroneState start;
    start.position = Vec3(jitter(rng), jitter(rng), alt_ref);

    auto steered = std::make_shared<bool>(false);
    LoopHooks hooks;
    hooks.on_tick = [&, steered](const DroneState& sensed, double t,
                                 ReferenceTrajectory& traj, double&) {
        if (!*steered && t >= scenario.steer_trigger_time) {
            traj = generate_avoidance(sensed, steer_angle_rad, scenario.v_des, t,
                                      alt_ref, sp.planner);
            *steered = true;
        }
    };
    hooks.stop_check = [&](const DroneState& state, double) -> std::optional<Outcome> {
        if (std::abs(state.position.z() - alt_ref) > scenario.max_alt_error)
            return Outcome::Diverged;
        const double tilt = std::acos(std::clamp(state.attitude(2, 2), -1.0, 1.0));
        if (tilt > scenario.max_tilt) return Outcome::Diverged;
        return std::nullopt;
    };

    const double total_time = scenario.steer_trigger_time +
                              scenario.steer_settle_time + 6.0;
    ReferenceTrajectory traj =
        initial_cruise(start, 0.0, scenario.v_des, alt_ref, sp.planner);
    RunRecord rec = run_closed_loop(sp, estimator, traj, start, total_time, hooks,
                                    mix_seed(seed, 0x1234ull));
    if (rec.outcome == Outcome::TimedOut) rec.outcome = Outcome::Completed;
    return rec;
}

namespace {

std::string controller_name(EstimatorMode mode) {
    switch (mode) {
        case EstimatorMode::None: return "wingless";
        case EstimatorMode::FlatPlate: return "flat_plate";
        case EstimatorMode::Parnn: return "parnn";
    }
    return "unknown";
}

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Completed: return "completed";
        case Outcome::Collided: return "collided";
        case Outcome::Diverged: return "diverged";
        case Outcome::TimedOut: return "timed_out";
    }
    return "unknown";
}

AeroEstimator make_estimator(EstimatorMode mode, const std::string& model_path,
                             const DroneParams& p) {
    if (mode == EstimatorMode::Parnn) {
        if (model_path.empty())
            throw std::runtime_error("parnn controller requires a model file");
        return AeroEstimator(load_model(model_path), p);
    }
    return AeroEstimator(mode);
}

}  // namespace

BatchResult run_batch(const ScenarioConfig& scenario,
                      const std::vector<EstimatorMode>& controllers,
                      const SimParams& sp, const std::string& out_dir,
                      bool write_traces) {
    namespace fs = std::filesystem;
    BatchResult batch;
    for (EstimatorMode mode : controllers) {
        const AeroEstimator proto =
            make_estimator(mode, scenario.model_path, sp.drone);
        ControllerSummary summary;
        summary.name = controller_name(mode);
        double dist_sum = 0.0, rmse_sum = 0.0;
        int successes = 0;
        for (int trial = 0; trial < scenario.trials; ++trial) {
            RunRecord rec;
            try {
                rec = run_trial(scenario, trial, sp, proto);
            } catch (const std::exception& ex) {
                std::cerr << "trial " << trial << " (" << summary.name
                          << ") failed: " << ex.what() << '\n';
                summary.outcomes.push_back(std::string("error: ") + ex.what());
                summary.rmse_per_trial.push_back(0.0);
                continue;
            }
            if (rec.outcome == Outcome::Completed) ++successes;
            dist_sum += rec.travel_distance;
            rmse_sum += rec.tracking_rmse;
            summary.rmse_per_trial.push_back(rec.tracking_rmse);
            summary.outcomes.push_back(outcome_name(rec.outcome));
            if (write_traces && !out_dir.empty()) {
                fs::create_directories(fs::path(out_dir) / summary.name);
                write_trace_csv(rec, (fs::path(out_dir) / summary.name /
                                      ("trial_" + std::to_string(trial) + ".csv"))
                                         .string());
            }
        }
        const double n = static_cast<double>(scenario.trials);
        summary.success_rate = successes / n;
        summary.mean_travel_distance = dist_sum / n;
        summary.rmse_mean = rmse_sum / n;
        batch.controllers.push_back(std::move(summary));
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_summary_json(batch, (fs::path(out_dir) / "summary.json").string());
    }
    return batch;
}

FlightLog collect_training_flight(const CollectConfig& cfg, const SimParams& sp) {
    if (cfg.duration <= 0.0) {
        std::cerr << "warning: zero-duration collection, empty log\n";
        return {};
    }
    SimParams wide = sp;
    wide.drone.roll_max = cfg.tilt_limit;
    wide.drone.pitch_max = cfg.tilt_limit;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    const double alt_ref = -30.0;
    DroneState start;
    start.position = Vec3(0.0, 0.0, alt_ref);

    struct Excitation {
        double next_switch{0.0};
        Vec3 ref_point{Vec3::Zero()};
        Vec3 ref_vel{Vec3::Zero()};
    };
    auto exc = std::make_shared<Excitation>();
    exc->ref_point = start.position;

    const double dt10 = wide.rates.plant_dt * wide.rates.position_decimation;

    LoopHooks hooks;
    hooks.force_wings_spread = true;
    hooks.on_tick = [&, exc](const DroneState& sensed, double t,
                             ReferenceTrajectory& traj, double&) {
        if (t >= exc->next_switch) {
            exc->next_switch = t + cfg.min_setpoint_hold +
                               uni(rng) * (cfg.max_setpoint_hold - cfg.min_setpoint_hold);
            const double speed = 0.2 + uni(rng) * (cfg.max_speed - 0.2);
            const double azim = uni(rng) * 2.0 * M_PI;
            // allow steep climbs/dives for vertical-speed coverage
            const double elev = (uni(rng) - 0.5) * 1.6;
            exc->ref_vel = speed * Vec3(std::cos(elev) * std::cos(azim),
                                        std::cos(elev) * std::sin(azim),
                                        std::sin(elev));
            exc->ref_point = sensed.position;
        }
        // moving carrot reference
        exc->ref_point += exc->ref_vel * dt10;
        TrajectorySegment seg;
        seg.start_time = t;
        seg.duration = std::numeric_limits<double>::infinity();
        seg.coeffs.setZero();
        for (int axis = 0; axis < 3; ++axis) {
            seg.coeffs(axis, 0) = exc->ref_point[axis];
            seg.coeffs(axis, 1) = exc->ref_vel[axis];
        }
        traj.segments.assign(1, seg);
    };

    ReferenceTrajectory traj;
    TrajectorySegment hold;
    hold.start_time = 0.0;
    hold.duration = std::numeric_limits<double>::infinity();
    hold.coeffs.setZero();
    hold.coeffs.col(0) = start.position;
    traj.segments.push_back(hold);

    RunRecord rec = run_closed_loop(wide, AeroEstimator(EstimatorMode::None), traj,
                                    start, cfg.duration, hooks,
                                    mix_seed(cfg.seed, 0xc0));

    if (cfg.accel_noise > 0.0) {
        std::normal_distribution<double> gauss(0.0, cfg.accel_noise);
        for (auto& step : rec.log)
            for (int i = 0; i < 3; ++i) step.accel[i] += gauss(rng);
    }
    return rec.log;
}

void write_trace_csv(const RunRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out.precision(17);
    out << "t,rx,ry,rz,vx,vy,vz,phi,theta,psi,wx,wy,wz,"
           "rdx,rdy,rdz,vdx,vdy,vdz,phi_d,theta_d,U_sigma,mode,w_s,flag,"
           "fhat_x,fhat_y,fhat_z,fa_x,fa_y,fa_z\n";
    for (const auto& r : rec.trace) {
        out << r.t << ',' << r.r.x() << ',' << r.r.y() << ',' << r.r.z() << ','
            << r.v.x() << ',' << r.v.y() << ',' << r.v.z() << ','
            << r.euler.roll << ',' << r.euler.pitch << ',' << r.euler.yaw << ','
            << r.omega.x() << ',' << r.omega.y() << ',' << r.omega.z() << ','
            << r.r_d.x() << ',' << r.r_d.y() << ',' << r.r_d.z() << ','
            << r.v_d.x() << ',' << r.v_d.y() << ',' << r.v_d.z() << ','
            << r.roll_d << ',' << r.pitch_d << ',' << r.thrust << ','
            << (r.mode == CtrlMode::PC ? "PC" : "WIIC") << ',' << r.wing_state
            << ',' << (r.flag ? 1 : 0) << ','
            << r.f_a_hat.x() << ',' << r.f_a_hat.y() << ',' << r.f_a_hat.z() << ','
            << r.f_a_true.x() << ',' << r.f_a_true.y() << ',' << r.f_a_true.z()
            << '\n';
    }
}

void write_summary_json(const BatchResult& batch, const std::string& path) {
    json j;
    for (const auto& c : batch.controllers) {
        j[c.name] = {
            {"success_rate", c.success_rate},
            {"mean_travel_distance_m", c.mean_travel_distance},
            {"rmse_mean", c.rmse_mean},
            {"rmse_per_trial", c.rmse_per_trial},
            {"outcomes", c.outcomes},
        };
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary file: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace fsd
