#pragma once

#include "objnerf/vec3.hpp"

namespace objnerf {

// Real spherical-harmonics basis, bands l = 0..degree-1 (degree^2 values),
// evaluated on a unit direction. Polynomial forms, hard constants.
template <typename S>
void sh_basis(int degree, const Vec3<S>& d, S* out) {
    S x = d.x, y = d.y, z = d.z;
    out[0] = S(0.28209479177387814);
    if (degree <= 1) return;
    out[1] = S(-0.48860251190291987) * y;
    out[2] = S(0.48860251190291987) * z;
    out[3] = S(-0.48860251190291987) * x;
    if (degree <= 2) return;
    S xx = x * x, yy = y * y, zz = z * z;
    S xy = x * y, yz = y * z, xz = x * z;
    out[4] = S(1.0925484305920792) * xy;
    out[5] = S(-1.0925484305920792) * yz;
    out[6] = S(0.94617469575755997) * zz - S(0.31539156525252005);
    out[7] = S(-1.0925484305920792) * xz;
    out[8] = S(0.54627421529603959) * (xx - yy);
    if (degree <= 3) return;
    out[9] = S(0.59004358992664352) * y * (S(-3) * xx + yy);
    out[10] = S(2.8906114426405538) * xy * z;
    out[11] = S(0.45704579946446572) * y * (S(1) - S(5) * zz);
    out[12] = S(0.3731763325901154) * z * (S(5) * zz - S(3));
    out[13] = S(0.45704579946446572) * x * (S(1) - S(5) * zz);
    out[14] = S(1.4453057213202769) * z * (xx - yy);
    out[15] = S(0.59004358992664352) * x * (-xx + S(3) * yy);
}

// Accumulates d(loss)/d(direction) given upstream gradients on the basis
// values. Treats the direction as a free 3-vector (no unit-norm projection);
// callers keep directions unit by construction.
template <typename S>
void sh_basis_backward(int degree, const Vec3<S>& d, const S* up, Vec3<S>& d_dir) {
    S x = d.x, y = d.y, z = d.z;
    S gx = 0, gy = 0, gz = 0;
    if (degree > 1) {
        gy += S(-0.48860251190291987) * up[1];
        gz += S(0.48860251190291987) * up[2];
        gx += S(-0.48860251190291987) * up[3];
    }
    if (degree > 2) {
        gx += S(1.0925484305920792) * y * up[4];
        gy += S(1.0925484305920792) * x * up[4];
        gy += S(-1.0925484305920792) * z * up[5];
        gz += S(-1.0925484305920792) * y * up[5];
        gz += S(1.8923493915151199) * z * up[6];
        gx += S(-1.0925484305920792) * z * up[7];
        gz += S(-1.0925484305920792) * x * up[7];
        gx += S(1.0925484305920792) * x * up[8];
        gy += S(-1.0925484305920792) * y * up[8];
    }
    if (degree > 3) {
        S xx = x * x, yy = y * y, zz = z * z;
        gx += S(0.59004358992664352) * y * (S(-6) * x) * up[9];
        gy += S(0.59004358992664352) * (S(-3) * xx + S(3) * yy) * up[9];
        gx += S(2.8906114426405538) * y * z * up[10];
        gy += S(2.8906114426405538) * x * z * up[10];
        gz += S(2.8906114426405538) * x * y * up[10];
        gy += S(0.45704579946446572) * (S(1) - S(5) * zz) * up[11];
        gz += S(0.45704579946446572) * y * (S(-10) * z) * up[11];
        gz += S(0.3731763325901154) * (S(15) * zz - S(3)) * up[12];
        gx += S(0.45704579946446572) * (S(1) - S(5) * zz) * up[13];
        gz += S(0.45704579946446572) * x * (S(-10) * z) * up[13];
        gx += S(1.4453057213202769) * z * (S(2) * x) * up[14];
        gy += S(1.4453057213202769) * z * (S(-2) * y) * up[14];
        gz += S(1.4453057213202769) * (xx - yy) * up[14];
        gx += S(0.59004358992664352) * (S(-3) * xx + S(3) * yy) * up[15];
        gy += S(0.59004358992664352) * x * (S(6) * y) * up[15];
    }
    d_dir.x += gx;
    d_dir.y += gy;
    d_dir.z += gz;
}

} // namespace objnerf
