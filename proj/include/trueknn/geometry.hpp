#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace trueknn {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr bool operator==(const Point3&, const Point3&) = default;

    constexpr double operator[](int axis) const {
        return axis == 0 ? x : (axis == 1 ? y : z);
    }

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

struct Sphere {
    Point3 center;
    double radius = 0.0;
};

struct Aabb {
    Point3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
    Point3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity()};

    friend constexpr bool operator==(const Aabb&, const Aabb&) = default;

    /// An empty box (min > max) contains nothing and is the identity for `merge`.
    static constexpr Aabb empty() { return Aabb{}; }

    bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }

    void merge(const Aabb& other) {
        min = {std::min(min.x, other.min.x), std::min(min.y, other.min.y), std::min(min.z, other.min.z)};
        max = {std::max(max.x, other.max.x), std::max(max.y, other.max.y), std::max(max.z, other.max.z)};
    }

    void merge(const Point3& p) {
        min = {std::min(min.x, p.x), std::min(min.y, p.y), std::min(min.z, p.z)};
        max = {std::max(max.x, p.x), std::max(max.y, p.y), std::max(max.z, p.z)};
    }

    bool contains(const Aabb& inner) const {
        return min.x <= inner.min.x && min.y <= inner.min.y && min.z <= inner.min.z &&
               max.x >= inner.max.x && max.y >= inner.max.y && max.z >= inner.max.z;
    }

    /// Index of the axis with the largest extent (0 = x).
    int longest_axis() const {
        const double ex = max.x - min.x;
        const double ey = max.y - min.y;
        const double ez = max.z - min.z;
        if (ex >= ey && ex >= ez) return 0;
        return ey >= ez ? 1 : 2;
    }
};

/// Ray used by the hardware formulation of a point query: origin at the query,
/// direction (0,0,1), parametric range [0, smallest positive double]. Its swept
/// segment is the single point `origin`, so every query in this library is
/// answered with point containment tests instead; the type is kept to name
/// that equivalence.
struct QueryRay {
    Point3 origin;
    Point3 direction{0.0, 0.0, 1.0};
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::min();
};

constexpr double squared_distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

inline bool point_in_aabb(const Point3& p, const Aabb& box) {
    return box.min.x <= p.x && p.x <= box.max.x && box.min.y <= p.y && p.y <= box.max.y &&
           box.min.z <= p.z && p.z <= box.max.z;
}

/// Largest squared distance whose square root is <= radius.
///
/// Distances leave the library as sqrt(squared distance); comparing squared
/// distances against this bound instead of radius*radius makes the inclusive
/// test `d2 <= bound` agree exactly with `sqrt(d2) <= radius`, including at
/// radii produced by taking a square root (maxDist, percentile radii).
inline double squared_radius_bound(double radius) {
    if (!(radius > 0.0)) return radius == 0.0 ? 0.0 : -1.0;
    if (std::isinf(radius)) return radius;
    double bound = radius * radius;
    if (std::isinf(bound)) return bound;
    while (std::sqrt(bound) > radius) bound = std::nextafter(bound, 0.0);
    for (;;) {
        const double next = std::nextafter(bound, std::numeric_limits<double>::infinity());
        if (std::isinf(next) || std::sqrt(next) > radius) break;
        bound = next;
    }
    return bound;
}

inline bool point_in_sphere(const Point3& p, const Sphere& s) {
    return squared_distance(p, s.center) <= squared_radius_bound(s.radius);
}

constexpr Aabb aabb_of_sphere(const Sphere& s) {
    const double r = s.radius;
    return Aabb{{s.center.x - r, s.center.y - r, s.center.z - r},
                {s.center.x + r, s.center.y + r, s.center.z + r}};
}

}  // namespace trueknn
