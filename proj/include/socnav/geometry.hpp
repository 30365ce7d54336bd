#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace socnav {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

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
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double squared_norm(const Vec2& a) { return dot(a, a); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
constexpr Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }

inline bool is_finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Unit vector along `a`, or nullopt when `a` is (numerically) zero.
inline std::optional<Vec2> normalized(const Vec2& a, double eps = 1e-12) {
    const double n = norm(a);
    if (!(n > eps)) return std::nullopt;
    return a / n;
}

inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }
inline double angle_of(const Vec2& a) { return std::atan2(a.y, a.x); }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

/// Unsigned angle between two directions, in [0, pi].
inline double angle_between(const Vec2& a, const Vec2& b) {
    return std::abs(std::atan2(cross(a, b), dot(a, b)));
}

struct Segment {
    Vec2 a;
    Vec2 b;
    friend constexpr bool operator==(const Segment&, const Segment&) = default;
};

inline Vec2 closest_point_on_segment(const Vec2& p, const Segment& s) {
    const Vec2 d = s.b - s.a;
    const double len2 = squared_norm(d);
    if (len2 <= 0.0) return s.a;
    const double u = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
    return s.a + d * u;
}

inline double point_segment_distance(const Vec2& p, const Segment& s) {
    return distance(p, closest_point_on_segment(p, s));
}

/// Closed-segment intersection test, collinear overlaps included.
inline bool segments_intersect(const Segment& s, const Segment& t) {
    auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        const double v = cross(b - a, c - a);
        return (v > 0.0) - (v < 0.0);
    };
    auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& p) {
        return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
               std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
    };
    const int o1 = orient(s.a, s.b, t.a);
    const int o2 = orient(s.a, s.b, t.b);
    const int o3 = orient(t.a, t.b, s.a);
    const int o4 = orient(t.a, t.b, s.b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(s.a, s.b, t.a)) return true;
    if (o2 == 0 && on_segment(s.a, s.b, t.b)) return true;
    if (o3 == 0 && on_segment(t.a, t.b, s.a)) return true;
    if (o4 == 0 && on_segment(t.a, t.b, s.b)) return true;
    return false;
}

/// Distance along a ray (origin + s*dir, s >= 0, |dir| = 1) to the first
/// hit on the segment; nullopt on a miss. Parallel rays never hit.
inline std::optional<double> ray_segment_hit(const Vec2& origin, const Vec2& dir, const Segment& seg) {
    const Vec2 e = seg.b - seg.a;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const Vec2 w = seg.a - origin;
    const double s = cross(w, e) / denom;
    const double u = cross(w, dir) / denom;
    if (s < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return s;
}

}  // namespace socnav
