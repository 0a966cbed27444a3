#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace cadops {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 normalized(const Vec3& a) {
    double n = norm(a);
    return {a.x / n, a.y / n, a.z / n};
}

inline bool finite(const Vec3& a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Deterministic orthonormal in-plane basis (u, v) for a unit normal n, with
// u x v = n. The reference axis is the standard axis least aligned with n,
// ties resolved toward x.
inline std::array<Vec3, 2> plane_basis(const Vec3& n) {
    const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    int best = 0;
    double best_dot = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        double d = std::abs(dot(n, axes[k]));
        if (d < best_dot) {
            best_dot = d;
            best = k;
        }
    }
    Vec3 u = normalized(cross(n, axes[best]));
    Vec3 v = cross(n, u);
    return {u, v};
}

struct BBox {
    Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
    Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};

    void expand(const Vec3& p) {
        min.x = std::min(min.x, p.x);
        min.y = std::min(min.y, p.y);
        min.z = std::min(min.z, p.z);
        max.x = std::max(max.x, p.x);
        max.y = std::max(max.y, p.y);
        max.z = std::max(max.z, p.z);
    }

    bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extent() const { return max - min; }
    double max_extent() const {
        Vec3 e = extent();
        return std::max(e.x, std::max(e.y, e.z));
    }
};

// Signed area of a planar polygon given in the (u, v) coordinates of its
// plane. Positive for counterclockwise winding.
inline double polygon_area_2d(const std::vector<std::array<double, 2>>& pts) {
    double a = 0;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = pts[i];
        const auto& q = pts[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * a;
}

inline std::array<double, 2> project_to_plane(const Vec3& p, const Vec3& origin, const Vec3& u,
                                              const Vec3& v) {
    Vec3 d = p - origin;
    return {dot(d, u), dot(d, v)};
}

inline double point_segment_distance_2d(const std::array<double, 2>& p,
                                        const std::array<double, 2>& a,
                                        const std::array<double, 2>& b) {
    double abx = b[0] - a[0], aby = b[1] - a[1];
    double apx = p[0] - a[0], apy = p[1] - a[1];
    double len2 = abx * abx + aby * aby;
    double t = len2 > 0 ? std::clamp((apx * abx + apy * aby) / len2, 0.0, 1.0) : 0.0;
    double dx = apx - t * abx, dy = apy - t * aby;
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace cadops
