#include <doctest.h>

#include "fsd/control.hpp"

#include <random>

using namespace fsd;

TEST_CASE("pc_position_loop") {
    SimParams sp;
    PidState pid;
    DroneState s;
    SUBCASE("no error, no output") {
        const Vec3 a = pc_position_loop(s, Vec3::Zero(), Vec3::Zero(), pid, sp.pos_gains, 0.1);
        CHECK(a.norm() == 0.0);
    }
    SUBCASE("pure P config") {
        PositionGains g;
        g.kp_pos = Vec3::Ones();
        g.kp_vel = Vec3::Constant(2.0);
        g.ki_vel = Vec3::Zero();
        g.kd_vel = Vec3::Zero();
        const Vec3 a = pc_position_loop(s, Vec3(1, 0, 0), Vec3::Zero(), pid, g, 0.1);
        CHECK((a - Vec3(2, 0, 0)).norm() < 1e-12);
    }
    SUBCASE("integral equals the dt-weighted error sum") {
        PositionGains g = sp.pos_gains;
        g.integral_limit = 1e9;       // disable clamping for the oracle comparison
        g.catchup_speed_max = 1e9;
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Vec3 expected = Vec3::Zero();
        const double dt = 0.1;
        for (int k = 0; k < 200; ++k) {
            s.position = Vec3(dist(rng), dist(rng), dist(rng));
            s.velocity = Vec3(dist(rng), dist(rng), dist(rng));
            const Vec3 ref(dist(rng), dist(rng), dist(rng));
            // independent accumulation of the velocity error
            const Vec3 e = g.kp_pos.cwiseProduct(ref - s.position) - s.velocity;
            pc_position_loop(s, ref, Vec3::Zero(), pid, g, dt);
            expected += e * dt;
        }
        CHECK((pid.integral - expected).norm() < 1e-12);
    }
    SUBCASE("NaN input is a hard error") {
        s.position.x() = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS(pc_position_loop(s, Vec3::Zero(), Vec3::Zero(), pid, sp.pos_gains, 0.1));
    }
    SUBCASE("anti-windup clamps the accumulator") {
        PositionGains g = sp.pos_gains;
        DroneState far;
        far.position = Vec3(1e4, 0, 0);
        for (int k = 0; k < 1000; ++k)
            pc_position_loop(far, Vec3::Zero(), Vec3::Zero(), pid, g, 0.1);
        CHECK(g.ki_vel.x() * std::abs(pid.integral.x()) <= g.integral_limit + 1e-9);
    }
}

TEST_CASE("pc_attitude_thrust") {
    DroneParams p;
    DroneState s;
    SUBCASE("zero command is hover") {
        const auto out = pc_attitude_thrust(Vec3::Zero(), s, p, 0.1);
        CHECK(out.thrust == doctest::Approx(5.37588).epsilon(1e-4));
        CHECK(out.roll_d == 0.0);
        CHECK(out.pitch_d == 0.0);
    }
    SUBCASE("free-fall command zeroes the thrust") {
        const auto out = pc_attitude_thrust(Vec3(0, 0, p.gravity), s, p, 0.1);
        CHECK(out.thrust == doctest::Approx(0.0));
        CHECK(out.thrust_indeterminate);
    }
    SUBCASE("forward acceleration pitches down") {
        const auto out = pc_attitude_thrust(Vec3(2, 0, 0), s, p, 0.1);
        const double u = p.mass * p.gravity;
        CHECK(out.pitch_d == doctest::Approx(-2.0 * p.mass / u).epsilon(1e-9));
        CHECK(out.pitch_d == doctest::Approx(-0.2039).epsilon(1e-3));
    }
}

TEST_CASE("woeg_flag") {
    SimParams sp;
    DroneState s;
    SUBCASE("no force, no benefit") {
        CHECK_FALSE(woeg_flag(Vec3::Zero(), Vec3(1, 0, 0), s, sp.drone, sp.twcc));
    }
    SUBCASE("aligned force is beneficial") {
        CHECK(woeg_flag(Vec3(1, 0, 0), Vec3(2, 0, 0), s, sp.drone, sp.twcc));
    }
    SUBCASE("nearly orthogonal force is rejected") {
        const double angle = 89.0 * M_PI / 180.0;
        const Vec3 f(std::cos(angle), std::sin(angle), 0.0);
        CHECK_FALSE(woeg_flag(f, Vec3(1, 0, 0), s, sp.drone, sp.twcc));
        const double angle2 = 80.0 * M_PI / 180.0;
        const Vec3 f2(std::cos(angle2), std::sin(angle2), 0.0);
        CHECK(woeg_flag(f2, Vec3(1, 0, 0), s, sp.drone, sp.twcc));
    }
    SUBCASE("no horizontal demand, no flag") {
        CHECK_FALSE(woeg_flag(Vec3(1, 0, 0), Vec3(0, 0, -3), s, sp.drone, sp.twcc));
    }
}

namespace {

AttitudeThrust saturated_pitch_raw(const Vec3& a_cmd, const DroneState& s,
                                   const DroneParams& p) {
    AttitudeThrust raw = pc_attitude_thrust(a_cmd, s, p, 0.1);
    raw.pitch_saturated = true;
    return raw;
}

}  // namespace

TEST_CASE("wiic_override") {
    DroneParams p;
    DroneState s;
    SUBCASE("aero covering the full demand is infeasible") {
        const Vec3 a_cmd(-4.0, 0.0, 0.0);
        const Vec3 f_a(p.mass * a_cmd.x(), 0.0, 0.0);
        const auto raw = saturated_pitch_raw(a_cmd, s, p);
        const auto cmd = wiic_override(a_cmd, f_a, raw, SaturatedAxis::Pitch, 0.0, p);
        CHECK(cmd.wiic_infeasible);
        CHECK(cmd.wing_state == 1);
    }
    SUBCASE("zero feedforward reduces to PC at the pinned angle") {
        const Vec3 a_cmd(-8.0, 0.5, 0.0);
        const auto raw = saturated_pitch_raw(a_cmd, s, p);
        const auto cmd = wiic_override(a_cmd, Vec3::Zero(), raw, SaturatedAxis::Pitch, 0.0, p);
        CHECK(std::abs(cmd.pitch_d) == doctest::Approx(p.pitch_max));
        const double axis_u = -p.mass / cmd.pitch_d * a_cmd.x();
        // thrust past vertical balance at the pinned tilt only climbs
        const double cap_u = p.mass * p.gravity / std::cos(cmd.pitch_d);
        const double expected_u = std::min(axis_u, cap_u);
        CHECK(cmd.thrust == doctest::Approx(std::clamp(expected_u, p.thrust_min, p.thrust_max)));
    }
    SUBCASE("hand-evaluated oblique case") {
        const Vec3 a_cmd(-8.0, 1.0, 0.0);
        const Vec3 f_a(-1.5, 0.2, 0.9);
        const auto raw = saturated_pitch_raw(a_cmd, s, p);
        const auto cmd = wiic_override(a_cmd, f_a, raw, SaturatedAxis::Pitch, 0.0, p);
        // raw request theta = -(m/U) a_x is positive for decelerating a_x
        const double theta_d = p.pitch_max;
        const double u = -p.mass / theta_d * (a_cmd.x() - f_a.x() / p.mass);
        const double phi = p.mass / u * (a_cmd.y() - f_a.y() / p.mass);
        CHECK(cmd.pitch_d == doctest::Approx(theta_d));
        CHECK(cmd.thrust == doctest::Approx(std::clamp(u, p.thrust_min, p.thrust_max)));
        if (u <= p.thrust_max && u >= p.thrust_min)
            CHECK(cmd.roll_d == doctest::Approx(std::clamp(phi, -p.roll_max, p.roll_max)));
    }
}

TEST_CASE("wiic algebraic consistency in x and y") {
    // plugging the WIIC outputs into the small-angle translational model
    // must reproduce the commanded accelerations
    DroneParams p;
    DroneState s;
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    int checked = 0;
    for (int k = 0; k < 5000; ++k) {
        const Vec3 a_cmd(10.0 * dist(rng), 10.0 * dist(rng), 2.0 * dist(rng));
        const Vec3 f_a(3.0 * dist(rng), 3.0 * dist(rng), 3.0 * dist(rng));
        const auto raw = pc_attitude_thrust(a_cmd, s, p, 0.1);
        for (SaturatedAxis axis : {SaturatedAxis::Pitch, SaturatedAxis::Roll}) {
            const auto cmd = wiic_override(a_cmd, f_a, raw, axis, 0.0, p);
            if (cmd.wiic_infeasible || cmd.clamped) continue;
            const double ax = -cmd.thrust / p.mass * cmd.pitch_d + f_a.x() / p.mass;
            const double ay = cmd.thrust / p.mass * cmd.roll_d + f_a.y() / p.mass;
            CHECK(ax == doctest::Approx(a_cmd.x()).epsilon(1e-9));
            CHECK(ay == doctest::Approx(a_cmd.y()).epsilon(1e-9));
            ++checked;
        }
    }
    CHECK(checked > 200);
}

TEST_CASE("twcc_step mode selection") {
    SimParams sp;
    DroneState s;
    const double dt = 0.1;
    SUBCASE("small offset stays in PC with folded wings") {
        PidState pid;
        const auto cmd = twcc_step(s, Vec3(0.3, 0.0, 0.0), Vec3::Zero(), Vec3::Zero(), 0.0, pid,
                                   EstimatorMode::FlatPlate, Vec3::Zero(), sp, dt);
        CHECK(cmd.mode == CtrlMode::PC);
        CHECK(cmd.wing_state == 0);
    }
    SUBCASE("saturating demand with favorable aero goes to WIIC") {
        PidState pid;
        s.velocity = Vec3(7.0, 0.0, 0.0);
        const Vec3 f_hat(-2.0, 0.0, 0.0);  // opposing motion, aligned with demand
        const auto cmd = twcc_step(s, Vec3(-20.0, 0.0, 0.0), Vec3::Zero(), Vec3::Zero(), 0.0, pid,
                                   EstimatorMode::FlatPlate, f_hat, sp, dt);
        CHECK(cmd.mode == CtrlMode::WIIC);
        CHECK(cmd.wing_state == 1);
        CHECK(std::abs(cmd.pitch_d) == doctest::Approx(sp.drone.pitch_max));
    }
    SUBCASE("saturating demand without aero clamps and stays in PC") {
        PidState pid;
        s.velocity = Vec3(7.0, 0.0, 0.0);
        const auto cmd = twcc_step(s, Vec3(-20.0, 0.0, 0.0), Vec3::Zero(), Vec3::Zero(), 0.0, pid,
                                   EstimatorMode::None, Vec3::Zero(), sp, dt);
        CHECK(cmd.mode == CtrlMode::PC);
        CHECK(cmd.wing_state == 0);
        CHECK(std::abs(cmd.pitch_d) == doctest::Approx(sp.drone.pitch_max));
        CHECK(cmd.clamped);
    }
    SUBCASE("favorable aero spreads the wings even without saturation") {
        PidState pid;
        const Vec3 f_hat(1.0, 0.0, 0.0);  // pushes along the demanded direction
        const auto cmd = twcc_step(s, Vec3(1.0, 0.0, 0.0), Vec3::Zero(), Vec3::Zero(), 0.0, pid,
                                   EstimatorMode::FlatPlate, f_hat, sp, dt);
        CHECK(cmd.mode == CtrlMode::PC);
        CHECK(cmd.flag);
        CHECK(cmd.wing_state == 1);
        CHECK(std::abs(cmd.pitch_d) < sp.drone.pitch_max);
    }
    SUBCASE("spread wings feed the predicted force into the attitude solve") {
        PidState pid1, pid2;
        const Vec3 f_hat(1.0, 0.0, 0.0);
        DroneState spread = s;
        spread.wing_state = 1;
        const auto with_comp =
            twcc_step(spread, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 0.0, pid1,
                      EstimatorMode::FlatPlate, f_hat, sp, dt);
        const auto folded =
            twcc_step(s, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 0.0, pid2,
                      EstimatorMode::FlatPlate, f_hat, sp, dt);
        CHECK(folded.pitch_d == doctest::Approx(0.0));
        // the vehicle leans back against the predicted forward push
        CHECK(with_comp.pitch_d > 0.1);
    }
    SUBCASE("delivered command always satisfies the limits") {
        std::mt19937_64 rng(43);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (int k = 0; k < 2000; ++k) {
            PidState pid;
            DroneState st;
            st.position = Vec3(10 * dist(rng), 10 * dist(rng), 10 * dist(rng));
            st.velocity = Vec3(8 * dist(rng), 8 * dist(rng), 4 * dist(rng));
            st.attitude = rotation_from_euler({0.4 * dist(rng), 0.4 * dist(rng), 3 * dist(rng)});
            const Vec3 ref(30 * dist(rng), 30 * dist(rng), 10 * dist(rng));
            const Vec3 f_hat(4 * dist(rng), 4 * dist(rng), 4 * dist(rng));
            const auto mode = (k % 3 == 0)   ? EstimatorMode::None
                              : (k % 3 == 1) ? EstimatorMode::FlatPlate
                                             : EstimatorMode::Parnn;
            const auto cmd = twcc_step(st, ref, Vec3::Zero(), Vec3::Zero(), 0.0, pid, mode, f_hat, sp, dt);
            CHECK(std::abs(cmd.roll_d) <= sp.drone.roll_max + 1e-12);
            CHECK(std::abs(cmd.pitch_d) <= sp.drone.pitch_max + 1e-12);
            CHECK(cmd.thrust >= sp.drone.thrust_min - 1e-12);
            CHECK(cmd.thrust <= sp.drone.thrust_max + 1e-12);
            if (mode == EstimatorMode::None) CHECK(cmd.wing_state == 0);
        }
    }
    SUBCASE("mode decision is deterministic") {
        PidState pid1, pid2;
        DroneState st;
        st.velocity = Vec3(6.0, 1.0, 0.0);
        const auto c1 = twcc_step(st, Vec3(-15, 3, 0), Vec3::Zero(), Vec3::Zero(), 0.0, pid1,
                                  EstimatorMode::FlatPlate, Vec3(-2, 0.5, 0), sp, dt);
        const auto c2 = twcc_step(st, Vec3(-15, 3, 0), Vec3::Zero(), Vec3::Zero(), 0.0, pid2,
                                  EstimatorMode::FlatPlate, Vec3(-2, 0.5, 0), sp, dt);
        CHECK(c1.mode == c2.mode);
        CHECK(c1.thrust == c2.thrust);
        CHECK(c1.roll_d == c2.roll_d);
        CHECK(c1.pitch_d == c2.pitch_d);
    }
}

TEST_CASE("attitude_backstepping") {
    DroneParams p;
    AttitudeGains g;
    SUBCASE("rest with zero error produces zero torque") {
        DroneState s;
        AttitudeCtlState ctl;
        ControlCommand cmd;
        const Vec3 tq = attitude_backstepping(s, cmd, ctl, p, g, 1.0 / 300.0);
        CHECK(tq.norm() < 1e-12);
    }
    SUBCASE("pure roll error matches the stated law") {
        DroneState s;
        AttitudeCtlState ctl;
        ControlCommand cmd;
        cmd.roll_d = 0.1;
        const double c1 = g.c1.x(), c2 = g.c2.x(), lam = g.lambda.x();
        const double e1 = 0.1;
        const double e2 = c1 * e1;  // chi = 0, rate = 0
        const double expected =
            p.inertia_diag.x() * (e1 * (1.0 - c1 * c1 + lam) + e2 * (c1 + c2));
        const Vec3 tq = attitude_backstepping(s, cmd, ctl, p, g, 1.0 / 300.0);
        CHECK(tq.x() == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("gyroscopic compensation at zero error") {
        DroneState s;
        s.angular_velocity = Vec3(1.0, -2.0, 0.5);
        AttitudeCtlState ctl;
        ControlCommand cmd;
        const Vec3 tq = attitude_backstepping(s, cmd, ctl, p, g, 1.0 / 300.0);
        const Mat3 J = p.inertia();
        const Vec3 gyro = s.angular_velocity.cross(J * s.angular_velocity);
        // remaining part is the rate-damping response to nonzero omega
        const Vec3 rate_part = tq - gyro;
        for (int i = 0; i < 3; ++i)
            CHECK(rate_part[i] ==
                  doctest::Approx(-J(i, i) * (g.c1[i] + g.c2[i]) * s.angular_velocity[i]));
    }
    SUBCASE("closed loop from 20 deg roll settles within 1.5 s") {
        SimParams sp;
        const AllocationMatrix alloc(sp.drone);
        DroneState s;
        s.attitude = rotation_from_euler({20.0 * M_PI / 180.0, 0.0, 0.0});
        AttitudeCtlState ctl;
        ControlCommand cmd;
        cmd.thrust = sp.drone.mass * sp.drone.gravity;
        const double dt = sp.rates.plant_dt;
        double settled_at = -1.0;
        for (int step = 0; step < 3 * 3000; ++step) {
            Vec3 tq;
            static Vec4 motors = Vec4::Zero();
            if (step % sp.rates.attitude_decimation == 0) {
                tq = attitude_backstepping(s, cmd, ctl, sp.drone, sp.att_gains,
                                           dt * sp.rates.attitude_decimation);
                const Vec4 u(cmd.thrust, tq.x(), tq.y(), tq.z());
                motors = alloc.allocate(u, sp.drone).forces;
            }
            const Vec4 u_real = alloc.mix() * motors;
            s = step_dynamics(s, motors, u_real.tail<3>(), Vec3::Zero(), sp.drone, dt);
            if (std::abs(s.euler().roll) < 1.0 * M_PI / 180.0) {
                settled_at = s.time;
                break;
            }
        }
        CHECK(settled_at > 0.0);
        CHECK(settled_at < 1.5);
    }
    SUBCASE("linearized closed loop is Hurwitz for default gains") {
        CHECK_NOTHROW(g.validate());
        AttitudeGains bad;
        bad.c1 = Vec3::Constant(-1.0);
        bad.c2 = Vec3::Constant(-1.0);
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
}

TEST_CASE("params JSON round trip") {
    SimParams p;
    p.twcc.wing_hold_time = 0.7;
    p.oracle.gain1 = 2.0;
    p.planner.accel_budget = 6.5;
    const SimParams q = parse_params(dump_params(p));
    CHECK(q.twcc.wing_hold_time == 0.7);
    CHECK(q.oracle.gain1 == 2.0);
    CHECK(q.planner.accel_budget == 6.5);
    CHECK(q.drone.mass == p.drone.mass);

    // partial override applies on top of defaults
    const SimParams r = parse_params(R"({"twcc": {"wing_hold_time": 0.25}})");
    CHECK(r.twcc.wing_hold_time == 0.25);
    CHECK(r.drone.mass == SimParams{}.drone.mass);
    CHECK(r.twcc.woeg_threshold == SimParams{}.twcc.woeg_threshold);
}
