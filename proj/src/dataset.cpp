#include "fsd/dataset.hpp"

#include "fsd/plant.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace fsd {

void write_log_csv(const FlightLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write log file: " + path);
    out.precision(17);
    out << "t,vx,vy,vz,phi,theta,psi,ax,ay,az,U_sigma,w_s\n";
    for (const auto& s : log) {
        out << s.t << ',' << s.velocity.x() << ',' << s.velocity.y() << ','
            << s.velocity.z() << ',' << s.euler.roll << ',' << s.euler.pitch << ','
            << s.euler.yaw << ',' << s.accel.x() << ',' << s.accel.y() << ','
            << s.accel.z() << ',' << s.thrust << ',' << s.wing_state << '\n';
    }
}

FlightLog read_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log file: " + path);
    FlightLog log;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        LogStep s;
        char c;
        ss >> s.t >> c >> s.velocity.x() >> c >> s.velocity.y() >> c >>
            s.velocity.z() >> c >> s.euler.roll >> c >> s.euler.pitch >> c >>
            s.euler.yaw >> c >> s.accel.x() >> c >> s.accel.y() >> c >>
            s.accel.z() >> c >> s.thrust >> c >> s.wing_state;
        if (!ss) throw std::runtime_error("malformed log row: " + line);
        log.push_back(s);
    }
    return log;
}

Vec3 label_from_log(const LogStep& step, const DroneParams& p) {
    const Mat3 r = rotation_from_euler(step.euler);
    const Vec3 thrust_body(0.0, 0.0, -step.thrust);
    return p.mass * step.accel - p.mass * p.gravity * Vec3::UnitZ() - r * thrust_body;
}

namespace {

VecX input_row(const LogStep& s, const DroneParams& p) {
    VecX x(8);
    const Mat3 r = rotation_from_euler(s.euler);
    const auto aoa = angle_of_attack(s.velocity, body_normal(r), p.v_eps);
    x << s.velocity.x(), s.velocity.y(), s.velocity.z(), s.euler.roll,
        s.euler.pitch, s.euler.yaw, s.velocity.norm(), aoa.alpha;
    return x;
}

}  // namespace

std::vector<AeroSequenceSample> build_dataset(const FlightLog& log,
                                              const DroneParams& p,
                                              const DatasetOptions& opt) {
    std::vector<AeroSequenceSample> out;
    const int n = static_cast<int>(log.size());
    if (n < opt.window) {
        std::cerr << "warning: log shorter than window (" << n << " < "
                  << opt.window << "), empty dataset\n";
        return out;
    }

    // optional central moving average on accelerations before labeling
    FlightLog smoothed = log;
    if (opt.smoothing_width > 1) {
        const int half = opt.smoothing_width / 2;
        for (int i = 0; i < n; ++i) {
            Vec3 acc = Vec3::Zero();
            int count = 0;
            for (int k = std::max(0, i - half); k <= std::min(n - 1, i + half); ++k) {
                acc += log[k].accel;
                ++count;
            }
            smoothed[i].accel = acc / count;
        }
    }

    for (int end = opt.window - 1; end < n; ++end) {
        bool ok = true;
        for (int k = end - opt.window + 1; k <= end; ++k) {
            if (log[k].wing_state == 0) { ok = false; break; }
        }
        if (!ok) continue;
        AeroSequenceSample s;
        s.inputs.reserve(opt.window);
        for (int k = end - opt.window + 1; k <= end; ++k)
            s.inputs.push_back(input_row(log[k], p));
        s.label = label_from_log(smoothed[end], p);
        s.velocity = log[end].velocity;
        s.attitude = rotation_from_euler(log[end].euler);
        out.push_back(std::move(s));
    }
    return out;
}

void fit_normalization(RnnModel& m, const std::vector<AeroSequenceSample>& samples) {
    if (samples.empty()) throw std::runtime_error("fit_normalization: empty sample set");
    const int dim = static_cast<int>(samples.front().inputs.front().size());
    VecX mean = VecX::Zero(dim), sq = VecX::Zero(dim);
    long count = 0;
    for (const auto& s : samples) {
        for (const auto& x : s.inputs) {
            mean += x;
            sq += x.cwiseProduct(x);
            ++count;
        }
    }
    mean /= static_cast<double>(count);
    sq /= static_cast<double>(count);
    VecX var = sq - mean.cwiseProduct(mean);
    m.feat_mean = mean;
    m.feat_scale = var.cwiseMax(1e-12).cwiseSqrt().cwiseMax(1e-6);
}

}  // namespace fsd
