#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>

namespace rjmlt {

constexpr double Pi = 3.14159265358979323846;
constexpr double InvPi = 0.31830988618379067154;
constexpr double TwoPi = 6.28318530717958647692;

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2 &o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2 &o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x*s, y*s}; }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
    explicit Vec3(double s) : x(s), y(s), z(s) {}

    Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(const Vec3 &o) const { return {x*o.x, y*o.y, z*o.z}; }
    Vec3 operator*(double s) const { return {x*s, y*s, z*s}; }
    Vec3 operator/(double s) const { return {x/s, y/s, z/s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }

    Vec3 &operator+=(const Vec3 &o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3 &operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    double maxComponent() const { return std::max(x, std::max(y, z)); }
};

inline Vec3 operator*(double s, const Vec3 &v) { return v*s; }

inline double dot(const Vec3 &a, const Vec3 &b) { return a.x*b.x + a.y*b.y + a.z*b.z; }

inline Vec3 cross(const Vec3 &a, const Vec3 &b)
{
    return {a.y*b.z - a.z*b.y, a.z*b.x - a.x*b.z, a.x*b.y - a.y*b.x};
}

inline double lengthSq(const Vec3 &v) { return dot(v, v); }
inline double length(const Vec3 &v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3 &v) { return v/length(v); }

inline Vec3 reflect(const Vec3 &w, const Vec3 &n)
{
    return n*(2.0*dot(w, n)) - w;
}

inline double luminance(const Vec3 &c)
{
    return 0.2126*c.x + 0.7152*c.y + 0.0722*c.z;
}

inline double clamp01(double x) { return std::min(std::max(x, 0.0), 1.0); }

inline double sqr(double x) { return x*x; }

// Orthonormal basis around a unit normal. Deterministic so that a frame can be
// rebuilt exactly from a stored vertex when inverting a sampling chain.
struct Frame {
    Vec3 t, b, n;

    Frame() = default;
    explicit Frame(const Vec3 &normal) : n(normal)
    {
        if (std::abs(n.z) > 0.999) {
            t = normalize(cross(Vec3(0.0, 1.0, 0.0), n));
        } else {
            t = normalize(cross(Vec3(0.0, 0.0, 1.0), n));
        }
        b = cross(n, t);
    }

    Vec3 toWorld(const Vec3 &v) const { return t*v.x + b*v.y + n*v.z; }
    Vec3 toLocal(const Vec3 &v) const { return {dot(v, t), dot(v, b), dot(v, n)}; }
};

inline std::ostream &operator<<(std::ostream &os, const Vec3 &v)
{
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

} // namespace rjmlt
