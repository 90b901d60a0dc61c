#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace fsd {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct EulerZyx {
    double roll{0.0};
    double pitch{0.0};
    double yaw{0.0};
};

// Rotation body->world for ZYX (yaw-pitch-roll) Euler angles.
inline Mat3 rotation_from_euler(const EulerZyx& e) {
    const double cph = std::cos(e.roll), sph = std::sin(e.roll);
    const double cth = std::cos(e.pitch), sth = std::sin(e.pitch);
    const double cps = std::cos(e.yaw), sps = std::sin(e.yaw);
    Mat3 r;
    r << cps * cth, cps * sth * sph - sps * cph, cps * sth * cph + sps * sph,
         sps * cth, sps * sth * sph + cps * cph, sps * sth * cph - cps * sph,
         -sth,      cth * sph,                   cth * cph;
    return r;
}

inline EulerZyx euler_from_rotation(const Mat3& r) {
    EulerZyx e;
    e.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    e.roll = std::atan2(r(2, 1), r(2, 2));
    e.yaw = std::atan2(r(1, 0), r(0, 0));
    return e;
}

inline Mat3 skew(const Vec3& w) {
    Mat3 s;
    s << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
         -w.y(), w.x(), 0.0;
    return s;
}

// Project a near-rotation matrix back onto SO(3).
inline Mat3 orthonormalize(const Mat3& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 q = svd.matrixU() * svd.matrixV().transpose();
    if (q.determinant() < 0.0) {
        Mat3 d = Mat3::Identity();
        d(2, 2) = -1.0;
        q = svd.matrixU() * d * svd.matrixV().transpose();
    }
    return q;
}

inline double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a < -M_PI) a += 2.0 * M_PI;
    return a;
}

}  // namespace fsd
