#pragma once

#include <cmath>
#include <ostream>

namespace ompath {

/// Point or direction in the plane. For the carbon model x is the carbonate
/// concentration c and y is DIC w, both in umol/kg.
struct Vec2 {
    double x{};
    double y{};

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator/(const Vec2& a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

    friend std::ostream& operator<<(std::ostream& os, const Vec2& v)
    {
        return os << '(' << v.x << ", " << v.y << ')';
    }
};

using State = Vec2;

inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

}  // namespace ompath
