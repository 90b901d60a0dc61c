#include "fsd/params.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <fstream>
#include <sstream>

namespace fsd {

using nlohmann::json;

void DroneParams::validate() const {
    if (mass <= 0.0) throw ConfigError("mass must be positive");
    if ((inertia_diag.array() <= 0.0).any()) throw ConfigError("inertia entries must be positive");
    if (wing_area <= 0.0) throw ConfigError("wing_area must be positive");
    if (air_density <= 0.0) throw ConfigError("air_density must be positive");
    if (roll_max <= 0.0 || roll_max >= M_PI / 2.0 ||
        pitch_max <= 0.0 || pitch_max >= M_PI / 2.0)
        throw ConfigError("angle limits must lie in (0, pi/2)");
    if (thrust_min < 0.0 || thrust_min >= thrust_max ||
        thrust_max > 4.0 * motor_thrust_max)
        throw ConfigError("thrust limits must satisfy 0 <= U_min < U_max <= 4 F_max");
}

void AttitudeGains::validate() const {
    // Linearized per-axis closed loop:
    //   s^3 + (c1+c2) s^2 + (1 + lambda + c1 c2) s + c2 lambda = 0
    for (int i = 0; i < 3; ++i) {
        Eigen::Matrix3d a;
        a << 0.0, 1.0, 0.0,
             0.0, 0.0, -1.0,
             c2[i] * lambda[i], 1.0 + lambda[i] + c1[i] * c2[i], -(c1[i] + c2[i]);
        const auto eig = a.eigenvalues();
        for (int k = 0; k < 3; ++k) {
            if (eig[k].real() >= -1e-9)
                throw ConfigError("attitude gains yield a non-Hurwitz closed loop");
        }
    }
}

void SimParams::validate() const {
    drone.validate();
    att_gains.validate();
    if (rates.plant_dt <= 0.0) throw ConfigError("plant_dt must be positive");
}

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
    return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

json to_json(const SimParams& p) {
    json j;
    j["drone"] = {
        {"mass", p.drone.mass},
        {"inertia", vec3_to_json(p.drone.inertia_diag)},
        {"wing_area", p.drone.wing_area},
        {"air_density", p.drone.air_density},
        {"gravity", p.drone.gravity},
        {"d_fr", p.drone.d_fr}, {"d_br", p.drone.d_br},
        {"d_fp", p.drone.d_fp}, {"d_bp", p.drone.d_bp},
        {"ct1", p.drone.ct1}, {"ct2", p.drone.ct2},
        {"motor_thrust_max", p.drone.motor_thrust_max},
        {"thrust_poly", p.drone.thrust_poly},
        {"roll_max_deg", p.drone.roll_max * 180.0 / M_PI},
        {"pitch_max_deg", p.drone.pitch_max * 180.0 / M_PI},
        {"thrust_min", p.drone.thrust_min},
        {"thrust_max", p.drone.thrust_max},
        {"v_eps", p.drone.v_eps},
    };
    j["oracle"] = {
        {"aoa_shift", p.oracle.aoa_shift},
        {"aoa_sharpness", p.oracle.aoa_sharpness},
        {"gain0", p.oracle.gain0},
        {"gain1", p.oracle.gain1},
    };
    j["position_gains"] = {
        {"kp_pos", vec3_to_json(p.pos_gains.kp_pos)},
        {"kp_vel", vec3_to_json(p.pos_gains.kp_vel)},
        {"ki_vel", vec3_to_json(p.pos_gains.ki_vel)},
        {"kd_vel", vec3_to_json(p.pos_gains.kd_vel)},
        {"integral_limit", p.pos_gains.integral_limit},
        {"catchup_speed_max", p.pos_gains.catchup_speed_max},
        {"max_down_accel_frac", p.pos_gains.max_down_accel_frac},
    };
    j["attitude_gains"] = {
        {"c1", vec3_to_json(p.att_gains.c1)},
        {"c2", vec3_to_json(p.att_gains.c2)},
        {"lambda", vec3_to_json(p.att_gains.lambda)},
        {"integral_limit", p.att_gains.integral_limit},
    };
    j["twcc"] = {
        {"woeg_threshold", p.twcc.woeg_threshold},
        {"thrust_eps", p.twcc.thrust_eps},
        {"wing_hold_time", p.twcc.wing_hold_time},
        {"woeg_rule", p.twcc.woeg_rule == WoegRule::DesiredForce ? "desired_force" : "thrust_axis"},
    };
    j["planner"] = {
        {"fov_half_angle_deg", p.planner.fov_half_angle * 180.0 / M_PI},
        {"sensing_range", p.planner.sensing_range},
        {"accel_budget", p.planner.accel_budget},
        {"cruise_accel_budget", p.planner.cruise_accel_budget},
        {"min_cubic_duration", p.planner.min_cubic_duration},
    };
    j["rates"] = {
        {"plant_dt", p.rates.plant_dt},
        {"attitude_decimation", p.rates.attitude_decimation},
        {"position_decimation", p.rates.position_decimation},
    };
    j["sensor_noise_pos"] = p.sensor_noise_pos;
    j["sensor_noise_vel"] = p.sensor_noise_vel;
    return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_vec3(const json& j, const char* key, Vec3& out) {
    if (j.contains(key)) out = vec3_from_json(j.at(key));
}

void maybe_angle_deg(const json& j, const char* key, double& out_rad) {
    if (j.contains(key)) out_rad = j.at(key).get<double>() * M_PI / 180.0;
}

void from_json_overrides(const json& j, SimParams& p) {
    if (j.contains("drone")) {
        const auto& d = j["drone"];
        maybe(d, "mass", p.drone.mass);
        maybe_vec3(d, "inertia", p.drone.inertia_diag);
        maybe(d, "wing_area", p.drone.wing_area);
        maybe(d, "air_density", p.drone.air_density);
        maybe(d, "gravity", p.drone.gravity);
        maybe(d, "d_fr", p.drone.d_fr);
        maybe(d, "d_br", p.drone.d_br);
        maybe(d, "d_fp", p.drone.d_fp);
        maybe(d, "d_bp", p.drone.d_bp);
        maybe(d, "ct1", p.drone.ct1);
        maybe(d, "ct2", p.drone.ct2);
        maybe(d, "motor_thrust_max", p.drone.motor_thrust_max);
        maybe(d, "thrust_poly", p.drone.thrust_poly);
        maybe_angle_deg(d, "roll_max_deg", p.drone.roll_max);
        maybe_angle_deg(d, "pitch_max_deg", p.drone.pitch_max);
        maybe(d, "thrust_min", p.drone.thrust_min);
        maybe(d, "thrust_max", p.drone.thrust_max);
        maybe(d, "v_eps", p.drone.v_eps);
    }
    if (j.contains("oracle")) {
        const auto& o = j["oracle"];
        maybe(o, "aoa_shift", p.oracle.aoa_shift);
        maybe(o, "aoa_sharpness", p.oracle.aoa_sharpness);
        maybe(o, "gain0", p.oracle.gain0);
        maybe(o, "gain1", p.oracle.gain1);
    }
    if (j.contains("position_gains")) {
        const auto& g = j["position_gains"];
        maybe_vec3(g, "kp_pos", p.pos_gains.kp_pos);
        maybe_vec3(g, "kp_vel", p.pos_gains.kp_vel);
        maybe_vec3(g, "ki_vel", p.pos_gains.ki_vel);
        maybe_vec3(g, "kd_vel", p.pos_gains.kd_vel);
        maybe(g, "integral_limit", p.pos_gains.integral_limit);
        maybe(g, "catchup_speed_max", p.pos_gains.catchup_speed_max);
        maybe(g, "max_down_accel_frac", p.pos_gains.max_down_accel_frac);
    }
    if (j.contains("attitude_gains")) {
        const auto& g = j["attitude_gains"];
        maybe_vec3(g, "c1", p.att_gains.c1);
        maybe_vec3(g, "c2", p.att_gains.c2);
        maybe_vec3(g, "lambda", p.att_gains.lambda);
        maybe(g, "integral_limit", p.att_gains.integral_limit);
    }
    if (j.contains("twcc")) {
        const auto& t = j["twcc"];
        maybe(t, "woeg_threshold", p.twcc.woeg_threshold);
        maybe(t, "thrust_eps", p.twcc.thrust_eps);
        maybe(t, "wing_hold_time", p.twcc.wing_hold_time);
        if (t.contains("woeg_rule")) {
            const std::string rule = t["woeg_rule"].get<std::string>();
            if (rule == "desired_force") p.twcc.woeg_rule = WoegRule::DesiredForce;
            else if (rule == "thrust_axis") p.twcc.woeg_rule = WoegRule::ThrustAxis;
            else throw ConfigError("unknown woeg_rule: " + rule);
        }
    }
    if (j.contains("planner")) {
        const auto& pl = j["planner"];
        maybe_angle_deg(pl, "fov_half_angle_deg", p.planner.fov_half_angle);
        maybe(pl, "sensing_range", p.planner.sensing_range);
        maybe(pl, "accel_budget", p.planner.accel_budget);
        maybe(pl, "cruise_accel_budget", p.planner.cruise_accel_budget);
        maybe(pl, "min_cubic_duration", p.planner.min_cubic_duration);
    }
    if (j.contains("rates")) {
        const auto& r = j["rates"];
        maybe(r, "plant_dt", p.rates.plant_dt);
        maybe(r, "attitude_decimation", p.rates.attitude_decimation);
        maybe(r, "position_decimation", p.rates.position_decimation);
    }
    maybe(j, "sensor_noise_pos", p.sensor_noise_pos);
    maybe(j, "sensor_noise_vel", p.sensor_noise_vel);
}

}  // namespace

std::string dump_params(const SimParams& p) { return to_json(p).dump(2); }

SimParams parse_params(const std::string& json_text) {
    SimParams p;
    json j = json::parse(json_text);
    from_json_overrides(j, p);
    p.validate();
    return p;
}

SimParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_params(ss.str());
}

}  // namespace fsd
