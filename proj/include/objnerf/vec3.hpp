#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace objnerf {

template <typename T>
struct Vec3 {
    T x = 0, y = 0, z = 0;

    constexpr Vec3() = default;
    constexpr Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(T s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(T s) { x *= s; y *= s; z *= s; return *this; }
    constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    constexpr T operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    template <typename U>
    constexpr Vec3<U> cast() const { return {static_cast<U>(x), static_cast<U>(y), static_cast<U>(z)}; }
};

template <typename T> constexpr Vec3<T> operator*(T s, const Vec3<T>& v) { return v * s; }

template <typename T> constexpr T dot(const Vec3<T>& a, const Vec3<T>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename T> constexpr Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <typename T> T norm(const Vec3<T>& v) { return std::sqrt(dot(v, v)); }

template <typename T> Vec3<T> normalized(const Vec3<T>& v) {
    T n = norm(v);
    return n > T(0) ? v / n : v;
}

template <typename T> constexpr Vec3<T> cwise_min(const Vec3<T>& a, const Vec3<T>& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}

template <typename T> constexpr Vec3<T> cwise_max(const Vec3<T>& a, const Vec3<T>& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

using Vec3d = Vec3<double>;
using Vec3f = Vec3<float>;

// Axis-aligned box, componentwise min < max when non-empty.
template <typename T>
struct Box3 {
    Vec3<T> min{0, 0, 0};
    Vec3<T> max{0, 0, 0};

    constexpr Vec3<T> center() const { return (min + max) * T(0.5); }
    constexpr Vec3<T> extent() const { return max - min; }
    constexpr bool contains(const Vec3<T>& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
    constexpr bool valid() const { return min.x < max.x && min.y < max.y && min.z < max.z; }
    Box3 inflated(T factor) const {
        Vec3<T> c = center(), h = extent() * (T(0.5) * factor);
        return {c - h, c + h};
    }
    Box3 merged(const Box3& o) const { return {cwise_min(min, o.min), cwise_max(max, o.max)}; }

    template <typename U>
    Box3<U> cast() const { return {min.template cast<U>(), max.template cast<U>()}; }
};

using Box3d = Box3<double>;
using Box3f = Box3<float>;

} // namespace objnerf
