#pragma once

#include <array>
#include <cmath>

#include "objnerf/vec3.hpp"

namespace objnerf {

// Unit quaternion, scalar-first.
struct Quatd {
    double w = 1, x = 0, y = 0, z = 0;

    static Quatd identity() { return {}; }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quatd normalized() const {
        double n = norm();
        return {w / n, x / n, y / n, z / n};
    }

    Quatd conjugate() const { return {w, -x, -y, -z}; }

    Quatd operator*(const Quatd& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    Vec3d rotate(const Vec3d& v) const {
        // q v q^-1 via the expanded two-cross form
        Vec3d u{x, y, z};
        Vec3d t = cross(u, v) * 2.0;
        return v + t * w + cross(u, t);
    }

    static Quatd from_axis_angle(const Vec3d& axis, double angle) {
        double h = 0.5 * angle;
        Vec3d a = objnerf::normalized(axis) * std::sin(h);
        return {std::cos(h), a.x, a.y, a.z};
    }

    // exp of a rotation vector (axis * angle)
    static Quatd exp_rotvec(const Vec3d& w) {
        double theta = objnerf::norm(w);
        if (theta < 1e-12) {
            // second-order series keeps unit norm to machine precision
            Quatd q{1.0 - theta * theta / 8.0, 0.5 * w.x, 0.5 * w.y, 0.5 * w.z};
            return q.normalized();
        }
        return from_axis_angle(w / theta, theta);
    }

    std::array<double, 9> to_matrix() const {
        double xx = x * x, yy = y * y, zz = z * z;
        double xy = x * y, xz = x * z, yz = y * z;
        double wx = w * x, wy = w * y, wz = w * z;
        return {1 - 2 * (yy + zz), 2 * (xy - wz),     2 * (xz + wy),
                2 * (xy + wz),     1 - 2 * (xx + zz), 2 * (yz - wx),
                2 * (xz - wy),     2 * (yz + wx),     1 - 2 * (xx + yy)};
    }

    // Shepperd's method; m row-major, must be a rotation.
    static Quatd from_matrix(const std::array<double, 9>& m) {
        double tr = m[0] + m[4] + m[8];
        Quatd q;
        if (tr > 0) {
            double s = std::sqrt(tr + 1.0) * 2;
            q = {0.25 * s, (m[7] - m[5]) / s, (m[2] - m[6]) / s, (m[3] - m[1]) / s};
        } else if (m[0] > m[4] && m[0] > m[8]) {
            double s = std::sqrt(1.0 + m[0] - m[4] - m[8]) * 2;
            q = {(m[7] - m[5]) / s, 0.25 * s, (m[1] + m[3]) / s, (m[2] + m[6]) / s};
        } else if (m[4] > m[8]) {
            double s = std::sqrt(1.0 + m[4] - m[0] - m[8]) * 2;
            q = {(m[2] - m[6]) / s, (m[1] + m[3]) / s, 0.25 * s, (m[5] + m[7]) / s};
        } else {
            double s = std::sqrt(1.0 + m[8] - m[0] - m[4]) * 2;
            q = {(m[3] - m[1]) / s, (m[2] + m[6]) / s, (m[5] + m[7]) / s, 0.25 * s};
        }
        return q.normalized();
    }
};

// World-from-camera rigid transform: x_world = R x_cam + t.
// The translation is the camera center in world coordinates.
struct Pose {
    Quatd rotation;
    Vec3d translation;

    static Pose identity() { return {}; }

    // Row-major 4x4 camera-to-world matrix (the manifest convention).
    std::array<double, 16> to_matrix4() const {
        auto r = rotation.to_matrix();
        return {r[0], r[1], r[2], translation.x,
                r[3], r[4], r[5], translation.y,
                r[6], r[7], r[8], translation.z,
                0,    0,    0,    1};
    }

    static Pose from_matrix4(const std::array<double, 16>& m) {
        Quatd q = Quatd::from_matrix({m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]});
        return {q, {m[3], m[7], m[11]}};
    }
};

inline Pose pose_compose(const Pose& a, const Pose& b) {
    return {(a.rotation * b.rotation).normalized(), a.rotation.rotate(b.translation) + a.translation};
}

inline Pose pose_inverse(const Pose& a) {
    Quatd qi = a.rotation.conjugate();
    return {qi, qi.rotate(-a.translation)};
}

inline Vec3d pose_apply(const Pose& a, const Vec3d& p) {
    return a.rotation.rotate(p) + a.translation;
}

// Left-multiplied SE(3) increment: X <- (exp(omega), tau) o X.
// Rotation acts about the world origin, so the camera center moves to
// exp(omega) t + tau.
inline Pose pose_retract(const Vec3d& omega, const Vec3d& tau, const Pose& x) {
    Quatd dq = Quatd::exp_rotvec(omega);
    return {(dq * x.rotation).normalized(), dq.rotate(x.translation) + tau};
}

} // namespace objnerf
