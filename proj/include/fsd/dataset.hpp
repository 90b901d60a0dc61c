#pragma once

#include "fsd/geometry.hpp"
#include "fsd/params.hpp"
#include "fsd/rnn.hpp"

#include <string>
#include <vector>

namespace fsd {

// One 10 Hz flight-log row (the dataset schema).
struct LogStep {
    double t{0.0};
    Vec3 velocity{Vec3::Zero()};  // world
    EulerZyx euler;
    Vec3 accel{Vec3::Zero()};     // world, r-double-dot
    double thrust{0.0};           // U_sigma actually applied, N
    int wing_state{0};
};

using FlightLog = std::vector<LogStep>;

void write_log_csv(const FlightLog& log, const std::string& path);
FlightLog read_log_csv(const std::string& path);

// Eq.-of-motion inversion: aerodynamic force from logged acceleration,
// attitude and thrust.
Vec3 label_from_log(const LogStep& step, const DroneParams& p);

// Length-10 window of state inputs paired with the final-step force label.
struct AeroSequenceSample {
    std::vector<VecX> inputs;  // raw 8-vectors [vx vy vz phi theta psi |v| alpha]
    Vec3 label{Vec3::Zero()};
    // Final-step kinematics for force reconstruction.
    Vec3 velocity{Vec3::Zero()};
    Mat3 attitude{Mat3::Identity()};
};

struct DatasetOptions {
    int window{10};
    int smoothing_width{3};  // central moving average on accelerations; <=1 disables
};

std::vector<AeroSequenceSample> build_dataset(const FlightLog& log,
                                              const DroneParams& p,
                                              const DatasetOptions& opt = {});

// Normalization statistics over raw inputs of a sample set.
void fit_normalization(RnnModel& m, const std::vector<AeroSequenceSample>& samples);

}  // namespace fsd
