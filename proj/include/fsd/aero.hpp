#pragma once

#include "fsd/geometry.hpp"
#include "fsd/params.hpp"

namespace fsd {

// Virtual-plane force reconstruction: combines an AOA correction alpha_w
// and a scale gamma with flat-plate physics to produce a world-frame
// force estimate.
struct ReconstructResult {
    Vec3 force{Vec3::Zero()};
    // Jacobians w.r.t. the two network outputs (zero outside the active
    // clip region or below the low-speed cutoff).
    Vec3 d_force_d_alpha_w{Vec3::Zero()};
    Vec3 d_force_d_gamma{Vec3::Zero()};
    bool degenerate{false};  // velocity parallel to plate normal; fallback used
    bool low_speed{false};
};

ReconstructResult reconstruct_force(double alpha_w, double gamma,
                                    const Vec3& velocity, const Mat3& attitude,
                                    const DroneParams& p);

}  // namespace fsd
