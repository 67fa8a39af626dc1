#pragma once

#include <cmath>
#include <ostream>

namespace flsim {

// Position, velocity, acceleration or force depending on context.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 &operator+=(const Vec3 &o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Vec3 &operator-=(const Vec3 &o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    constexpr Vec3 &operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3 &b) { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3 &b) { return a -= b; }
    friend constexpr Vec3 operator-(const Vec3 &a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend constexpr Vec3 operator/(const Vec3 &a, double s) { return {a.x / s, a.y / s, a.z / s}; }
    friend constexpr bool operator==(const Vec3 &, const Vec3 &) = default;

    friend std::ostream &operator<<(std::ostream &os, const Vec3 &v) {
        return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
    }
};

constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3 &a, const Vec3 &b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }

constexpr double norm_squared(const Vec3 &v) { return dot(v, v); }

inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }

inline bool is_finite(const Vec3 &v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Unit vector along v; zero stays zero.
inline Vec3 normalized(const Vec3 &v) {
    const double n = norm(v);
    return n > 0.0 ? v / n : Vec3{};
}

// Scales v down so that |v| <= limit.
inline Vec3 clip_norm(const Vec3 &v, double limit) {
    const double n = norm(v);
    return n > limit && n > 0.0 ? v * (limit / n) : v;
}

inline Vec3 rotate_about_z(const Vec3 &v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

inline Vec3 rotate_about_x(const Vec3 &v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {v.x, c * v.y - s * v.z, s * v.y + c * v.z};
}

}  // namespace flsim
