#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cadops/brep.hpp"
#include "cadops/brep_io.hpp"
#include "cadops/errors.hpp"
#include "cadops/jsonio.hpp"

namespace cadops {

// Dense row-major matrix without any linear-algebra dependency; the network
// layer maps these buffers directly.
struct RowMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    RowMatrix() = default;
    RowMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct FeatureMatrices {
    RowMatrix F;  // faces   x d_f
    RowMatrix E;  // edges   x d_e
    RowMatrix C;  // coedges x 1
    int grid_resolution = 5;
    int d_f() const { return F.cols; }
    int d_e() const { return E.cols; }
    int d_c() const { return C.cols; }
};

struct UVGrid {
    int resolution = 0;
    std::vector<Vec3> points;   // resolution^2, u-major
    std::vector<Vec3> normals;  // unit, outward per face orientation
};

inline Vec3 surface_point(const SurfaceGeom& s, double u, double v) {
    switch (s.kind) {
        case SurfaceKind::Plane: {
            auto uv = plane_basis(s.axis);
            return s.origin + uv[0] * u + uv[1] * v;
        }
        case SurfaceKind::Cylinder: {
            auto xy = plane_basis(s.axis);
            return s.origin + (xy[0] * std::cos(u) + xy[1] * std::sin(u)) * s.radius + s.axis * v;
        }
        case SurfaceKind::Cone: {
            auto xy = plane_basis(s.axis);
            double rad = s.radius + v * std::tan(s.half_angle);
            return s.origin + (xy[0] * std::cos(u) + xy[1] * std::sin(u)) * rad + s.axis * v;
        }
        case SurfaceKind::Sphere:
            return s.origin + Vec3{std::cos(v) * std::cos(u), std::cos(v) * std::sin(u),
                                   std::sin(v)} *
                                  s.radius;
        case SurfaceKind::Torus: {
            auto xy = plane_basis(s.axis);
            Vec3 d = xy[0] * std::cos(u) + xy[1] * std::sin(u);
            return s.origin + d * (s.radius + s.radius2 * std::cos(v)) + s.axis * (s.radius2 * std::sin(v));
        }
        default:
            throw UnsupportedSurface("cannot evaluate surface of kind 'other'");
    }
}

inline Vec3 surface_normal(const SurfaceGeom& s, double u, double v) {
    switch (s.kind) {
        case SurfaceKind::Plane:
            return s.axis;
        case SurfaceKind::Cylinder: {
            auto xy = plane_basis(s.axis);
            return xy[0] * std::cos(u) + xy[1] * std::sin(u);
        }
        case SurfaceKind::Cone: {
            auto xy = plane_basis(s.axis);
            Vec3 d = xy[0] * std::cos(u) + xy[1] * std::sin(u);
            double a = s.half_angle;
            return d * std::cos(a) - s.axis * std::sin(a);
        }
        case SurfaceKind::Sphere:
            return Vec3{std::cos(v) * std::cos(u), std::cos(v) * std::sin(u), std::sin(v)};
        case SurfaceKind::Torus: {
            auto xy = plane_basis(s.axis);
            Vec3 d = xy[0] * std::cos(u) + xy[1] * std::sin(u);
            return d * std::cos(v) + s.axis * std::sin(v);
        }
        default:
            throw UnsupportedSurface("cannot evaluate surface of kind 'other'");
    }
}

// r x r samples at uniform parameter steps over the uv_domain, endpoints
// included. Requires r >= 2.
inline UVGrid sample_uv_grid(const Face& face, int r) {
    if (r < 2) throw ValueError("grid resolution must be >= 2");
    const SurfaceGeom& s = face.surface;
    UVGrid g;
    g.resolution = r;
    g.points.reserve(static_cast<std::size_t>(r) * r);
    g.normals.reserve(static_cast<std::size_t>(r) * r);
    const double u0 = s.uv_domain[0], u1 = s.uv_domain[1];
    const double v0 = s.uv_domain[2], v1 = s.uv_domain[3];
    for (int i = 0; i < r; ++i) {
        double u = u0 + (u1 - u0) * static_cast<double>(i) / (r - 1);
        for (int j = 0; j < r; ++j) {
            double v = v0 + (v1 - v0) * static_cast<double>(j) / (r - 1);
            g.points.push_back(surface_point(s, u, v));
            g.normals.push_back(surface_normal(s, u, v));
        }
    }
    return g;
}

// Analytic face area. Planar faces integrate their boundary loops (holes
// subtract); curved faces cover their full uv_domain patch, which is exact
// for the rectangular trims this pipeline produces.
inline double face_area(const BRep& b, const Face& face) {
    const SurfaceGeom& s = face.surface;
    const double u0 = s.uv_domain[0], u1 = s.uv_domain[1];
    const double v0 = s.uv_domain[2], v1 = s.uv_domain[3];
    switch (s.kind) {
        case SurfaceKind::Plane: {
            auto uv = plane_basis(s.axis);
            double area2 = 0;  // twice the signed area
            for (const auto& loop : face.loops) {
                std::vector<std::array<double, 2>> pts;
                for (int cid : loop) {
                    const Coedge& c = b.coedges[static_cast<std::size_t>(cid)];
                    const CurveGeom& curve = b.edges[static_cast<std::size_t>(c.edge)].curve;
                    const int k = curve.kind == CurveKind::Line ? 2 : 33;
                    // walk the edge in coedge direction; the closing point of
                    // each edge is supplied by the next coedge in the loop
                    for (int i = 0; i < k - 1; ++i) {
                        double t = static_cast<double>(i) / (k - 1);
                        if (c.reversed) t = 1.0 - t;
                        pts.push_back(project_to_plane(curve_point(curve, t), s.origin, uv[0], uv[1]));
                    }
                }
                const std::size_t n = pts.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const auto& p = pts[i];
                    const auto& q = pts[(i + 1) % n];
                    area2 += p[0] * q[1] - q[0] * p[1];
                }
            }
            return 0.5 * area2;
        }
        case SurfaceKind::Cylinder:
            return s.radius * (u1 - u0) * (v1 - v0);
        case SurfaceKind::Cone: {
            double ta = std::tan(s.half_angle);
            double sec = 1.0 / std::cos(s.half_angle);
            auto anti = [&](double v) { return s.radius * v + 0.5 * ta * v * v; };
            return sec * (u1 - u0) * (anti(v1) - anti(v0));
        }
        case SurfaceKind::Sphere:
            return s.radius * s.radius * (u1 - u0) * (std::sin(v1) - std::sin(v0));
        case SurfaceKind::Torus:
            return s.radius2 * (u1 - u0) *
                   (s.radius * (v1 - v0) + s.radius2 * (std::sin(v1) - std::sin(v0)));
        default:
            throw UnsupportedSurface("cannot compute area of surface kind 'other'");
    }
}

struct NormalizedModel {
    BRep brep;
    double scale = 1;  // divisor applied after recentering
    Vec3 center;       // subtracted first
};

// Rigidly recenter and uniformly rescale so the bounding box fits [-1,1]^3
// with maximum extent exactly 2. Topology and labels are untouched.
inline NormalizedModel normalize_model(const BRep& b) {
    BBox box = model_bbox(b);
    if (!box.valid() || !(box.max_extent() > 0))
        throw DegenerateModel("model '" + b.name + "' has a degenerate bounding box");
    NormalizedModel out;
    out.center = box.center();
    out.scale = box.max_extent() / 2.0;
    out.brep = b;

    const Vec3 c = out.center;
    const double inv = 1.0 / out.scale;
    auto xf = [&](Vec3& p) { p = (p - c) * inv; };

    for (Face& f : out.brep.faces) {
        SurfaceGeom& s = f.surface;
        xf(s.origin);
        switch (s.kind) {
            case SurfaceKind::Plane:
                // in-plane parameters are lengths
                s.uv_domain = {s.uv_domain[0] * inv, s.uv_domain[1] * inv, s.uv_domain[2] * inv,
                               s.uv_domain[3] * inv};
                break;
            case SurfaceKind::Cylinder:
            case SurfaceKind::Cone:
                s.radius *= inv;
                s.uv_domain[2] *= inv;  // v is a length along the axis
                s.uv_domain[3] *= inv;
                break;
            case SurfaceKind::Sphere:
                s.radius *= inv;
                break;
            case SurfaceKind::Torus:
                s.radius *= inv;
                s.radius2 *= inv;
                break;
            default:
                break;
        }
    }
    for (Edge& e : out.brep.edges) {
        CurveGeom& cv = e.curve;
        switch (cv.kind) {
            case CurveKind::Line:
                xf(cv.start);
                xf(cv.end);
                break;
            case CurveKind::Arc:
                xf(cv.center);
                cv.radius *= inv;
                break;
            default:
                for (Vec3& p : cv.samples) xf(p);
                cv.other_length = curve_length(cv);
        }
    }
    out.brep.scale_info = model_bbox(out.brep);
    return out;
}

// Face row: [one-hot surface kind (6) | area | grid points (3r^2) | grid
// normals (3r^2)], so d_f = 7 + 6 r^2.
inline std::vector<double> face_feature_row(const BRep& b, const Face& face, int r) {
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(7 + 6 * r * r));
    for (int k = 0; k < 6; ++k) row.push_back(static_cast<int>(face.surface.kind) == k ? 1.0 : 0.0);
    row.push_back(face_area(b, face));
    UVGrid g = sample_uv_grid(face, r);
    for (const Vec3& p : g.points) {
        row.push_back(p.x);
        row.push_back(p.y);
        row.push_back(p.z);
    }
    for (const Vec3& n : g.normals) {
        row.push_back(n.x);
        row.push_back(n.y);
        row.push_back(n.z);
    }
    return row;
}

// Edge row: [one-hot curve kind (3) | one-hot convexity (3) | closed (1) |
// length (1) | 5 uniform curve samples (15)], d_e = 23.
inline std::vector<double> edge_feature_row(const BRep&, const Edge& edge) {
    std::vector<double> row;
    row.reserve(23);
    for (int k = 0; k < 3; ++k) row.push_back(static_cast<int>(edge.curve.kind) == k ? 1.0 : 0.0);
    for (int k = 0; k < 3; ++k) row.push_back(static_cast<int>(edge.convexity) == k ? 1.0 : 0.0);
    row.push_back(edge.closed ? 1.0 : 0.0);
    row.push_back(curve_length(edge.curve));
    for (int i = 0; i < 5; ++i) {
        Vec3 p = curve_point(edge.curve, static_cast<double>(i) / 4.0);
        row.push_back(p.x);
        row.push_back(p.y);
        row.push_back(p.z);
    }
    return row;
}

inline std::vector<double> coedge_feature_row(const BRep&, const Coedge& coedge) {
    return {coedge.reversed ? 1.0 : 0.0};
}

// Rows ordered by entity id. Expects a normalized model.
inline FeatureMatrices build_feature_matrices(const BRep& b, int r) {
    FeatureMatrices fm;
    fm.grid_resolution = r;
    const int d_f = 7 + 6 * r * r;
    fm.F = RowMatrix(b.n_faces(), d_f);
    fm.E = RowMatrix(b.n_edges(), 23);
    fm.C = RowMatrix(b.n_coedges(), 1);
    for (const Face& f : b.faces) {
        auto row = face_feature_row(b, f, r);
        for (int c = 0; c < d_f; ++c) fm.F.at(f.id, c) = row[static_cast<std::size_t>(c)];
    }
    for (const Edge& e : b.edges) {
        auto row = edge_feature_row(b, e);
        for (int c = 0; c < 23; ++c) fm.E.at(e.id, c) = row[static_cast<std::size_t>(c)];
    }
    for (const Coedge& c : b.coedges) fm.C.at(c.id, 0) = coedge_feature_row(b, c)[0];
    for (double v : fm.F.data)
        if (!std::isfinite(v)) throw ValueError("non-finite face feature");
    for (double v : fm.E.data)
        if (!std::isfinite(v)) throw ValueError("non-finite edge feature");
    return fm;
}

inline FeatureMatrices featurize(const BRep& b, int r) {
    return build_feature_matrices(normalize_model(b).brep, r);
}

inline std::string feature_dump_json(const FeatureMatrices& fm) {
    auto matrix = [](const RowMatrix& m) {
        std::string out = "[\n";
        for (int r = 0; r < m.rows; ++r) {
            std::vector<double> row(m.data.begin() + static_cast<std::ptrdiff_t>(r) * m.cols,
                                    m.data.begin() + static_cast<std::ptrdiff_t>(r + 1) * m.cols);
            out += "    " + json_double_array(row);
            out += (r + 1 < m.rows) ? ",\n" : "\n";
        }
        return out + "  ]";
    };
    std::string out = "{\n";
    out += "  \"dims\": {\"d_f\": " + std::to_string(fm.d_f()) +
           ", \"d_e\": " + std::to_string(fm.d_e()) + ", \"d_c\": " + std::to_string(fm.d_c()) +
           "},\n";
    out += "  \"grid_resolution\": " + std::to_string(fm.grid_resolution) + ",\n";
    out += "  \"F\": " + matrix(fm.F) + ",\n";
    out += "  \"E\": " + matrix(fm.E) + ",\n";
    out += "  \"C\": " + matrix(fm.C) + "\n";
    out += "}\n";
    return out;
}

}  // namespace cadops
