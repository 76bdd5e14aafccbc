#pragma once

#include <cmath>
#include <numbers>

namespace silhar {

// Image-plane point: x = column (grows right), y = row (grows down).
struct PointD {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PointD&, const PointD&) = default;
    PointD operator+(const PointD& o) const { return {x + o.x, y + o.y}; }
    PointD operator-(const PointD& o) const { return {x - o.x, y - o.y}; }
    PointD operator*(double s) const { return {x * s, y * s}; }
};

inline double distance(const PointD& a, const PointD& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }
inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

// Unsigned angle in degrees between vectors (a - vertex) and (b - vertex).
inline double angle_at(const PointD& vertex, const PointD& a, const PointD& b)
{
    const PointD u = a - vertex;
    const PointD v = b - vertex;
    const double cross = u.x * v.y - u.y * v.x;
    const double dot = u.x * v.x + u.y * v.y;
    return rad2deg(std::atan2(std::abs(cross), dot));
}

// Rounds half up; commutes with integer translation, unlike std::lround.

} // namespace silhar
