#include "fsd/aero.hpp"

#include "fsd/plant.hpp"

#include <cmath>

namespace fsd {

// Solves M n_f = b with M rows [n_v; n; n_v x n], b = [sin(a_est); cos(a_w); 0],
// normalizes, then picks the sign so the force opposes the velocity's
// component along the plate normal.
ReconstructResult reconstruct_force(double alpha_w, double gamma,
                                    const Vec3& velocity, const Mat3& attitude,
                                    const DroneParams& p) {
    ReconstructResult res;
    const double speed = velocity.norm();
    if (speed <= p.v_eps) {
        res.low_speed = true;
        return res;
    }
    const Vec3 n_v = velocity / speed;
    const Vec3 n = body_normal(attitude);
    const double sin_alpha = std::clamp(n_v.dot(n), -1.0, 1.0);
    const double alpha = std::asin(sin_alpha);

    const double raw = alpha + alpha_w;
    const bool clip_active = (raw <= -M_PI / 2.0) || (raw >= M_PI / 2.0);
    const double alpha_est = std::clamp(raw, -M_PI / 2.0, M_PI / 2.0);

    const double coeff = p.air_density * speed * speed * p.wing_area;
    const double f_size = std::sin(std::abs(alpha_est)) * coeff * gamma;
    const double sgn_est = (alpha_est >= 0.0) ? 1.0 : -1.0;
    // d f_size / d alpha_est, times the clip subgradient
    const double d_fsize_d_aw =
        clip_active ? 0.0 : sgn_est * std::cos(alpha_est) * coeff * gamma;
    const double d_fsize_d_gamma = std::sin(std::abs(alpha_est)) * coeff;

    const Vec3 cross = n_v.cross(n);
    const double drag_sign_src = n_v.dot(n);  // oppose velocity component along n

    if (cross.norm() < 1e-6) {
        // velocity parallel to the plate normal; direction degenerates to +-n
        res.degenerate = true;
        const double s = (alpha >= 0.0) ? -1.0 : 1.0;
        res.force = s * f_size * n;
        res.d_force_d_alpha_w = s * d_fsize_d_aw * n;
        res.d_force_d_gamma = s * d_fsize_d_gamma * n;
        return res;
    }

    Mat3 m;
    m.row(0) = n_v.transpose();
    m.row(1) = n.transpose();
    m.row(2) = cross.transpose();
    const Vec3 b(std::sin(alpha_est), std::cos(alpha_w), 0.0);

    Eigen::PartialPivLU<Mat3> lu(m);
    const Vec3 u = lu.solve(b);
    const double u_norm = u.norm();
    const Vec3 nf = u / u_norm;

    // sign: force component along n opposite to velocity component along n
    double s = -1.0;
    const double nf_dot_n = nf.dot(n);
    if (nf_dot_n * drag_sign_src > 0.0) s = -1.0; else s = 1.0;
    // For the reduction case (alpha_w = 0) nf = n and s = -sign(alpha),
    // matching the flat-plate minus sign.

    res.force = s * f_size * nf;

    // chain rule through b -> u -> nf
    const Vec3 db_d_aw(clip_active ? 0.0 : std::cos(alpha_est), -std::sin(alpha_w), 0.0);
    const Vec3 du = lu.solve(db_d_aw);
    const Vec3 dnf = (du - nf * nf.dot(du)) / u_norm;
    res.d_force_d_alpha_w = s * (d_fsize_d_aw * nf + f_size * dnf);
    res.d_force_d_gamma = s * d_fsize_d_gamma * nf;
    return res;
}

}  // namespace fsd
