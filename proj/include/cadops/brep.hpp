#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cadops/errors.hpp"
#include "cadops/geom.hpp"

namespace cadops {

enum class SurfaceKind { Plane, Cylinder, Cone, Sphere, Torus, Other };
enum class CurveKind { Line, Arc, Other };
enum class Convexity { Convex, Concave, Smooth };

inline const char* to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::Plane: return "plane";
        case SurfaceKind::Cylinder: return "cylinder";
        case SurfaceKind::Cone: return "cone";
        case SurfaceKind::Sphere: return "sphere";
        case SurfaceKind::Torus: return "torus";
        default: return "other";
    }
}

inline const char* to_string(CurveKind k) {
    switch (k) {
        case CurveKind::Line: return "line";
        case CurveKind::Arc: return "arc";
        default: return "other";
    }
}

inline const char* to_string(Convexity c) {
    switch (c) {
        case Convexity::Convex: return "convex";
        case Convexity::Concave: return "concave";
        default: return "smooth";
    }
}

// Parametric surface carrier. Field meaning depends on kind:
//   plane:    origin, axis = unit outward normal
//   cylinder: origin = axis point, axis = unit axis, radius
//   cone:     origin = axis point, axis, radius (at origin), half_angle
//   sphere:   origin = center, radius
//   torus:    origin = center, axis, radius (major), radius2 (minor)
// The in-plane / around-axis reference directions are always derived with
// plane_basis(), so a (kind, params) pair fully determines the mapping
// p(u, v). The surface normal is the face's outward normal.
struct SurfaceGeom {
    SurfaceKind kind = SurfaceKind::Plane;
    Vec3 origin;
    Vec3 axis{0, 0, 1};
    double radius = 0;
    double radius2 = 0;
    double half_angle = 0;
    std::array<double, 4> uv_domain{0, 1, 0, 1};
};

// Edge curve. line: start/end. arc: center, axis (plane normal), radius and
// angle range measured from plane_basis(axis)[0]. other: polyline samples
// plus precomputed length.
struct CurveGeom {
    CurveKind kind = CurveKind::Line;
    Vec3 start, end;
    Vec3 center, axis{0, 0, 1};
    double radius = 0;
    double angle0 = 0, angle1 = 0;
    std::vector<Vec3> samples;
    double other_length = 0;
};

struct FaceLabels {
    int op_type = 0;
    int op_step = 0;
    bool operator==(const FaceLabels&) const = default;
};

struct Face {
    int id = 0;
    SurfaceGeom surface;
    std::vector<std::vector<int>> loops;  // coedge id cycles, loops[0] is the outer loop
    std::optional<FaceLabels> labels;
};

struct Edge {
    int id = 0;
    CurveGeom curve;
    std::array<int, 2> coedges{-1, -1};
    Convexity convexity = Convexity::Convex;
    bool closed = false;
};

struct Coedge {
    int id = 0;
    int edge = -1;
    int face = -1;
    int next = -1;
    int prev = -1;
    int mate = -1;
    bool reversed = false;
};

// Operation-type class list plus the sub-type grouping used by the
// consistency metrics (extrude_side and extrude_end collapse to extrude,
// and likewise for the other side/end families).
struct TypeVocabulary {
    std::vector<std::string> names;

    static std::string grouped_name(const std::string& name) {
        auto strip = [&](const char* suffix) -> std::optional<std::string> {
            std::string s(suffix);
            if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0)
                return name.substr(0, name.size() - s.size());
            return std::nullopt;
        };
        if (auto g = strip("_side")) return *g;
        if (auto g = strip("_end")) return *g;
        return name;
    }

    std::string group_of(int type_index) const {
        if (type_index < 0 || type_index >= static_cast<int>(names.size()))
            throw UnknownLabel("op_type index " + std::to_string(type_index) +
                               " outside vocabulary of size " + std::to_string(names.size()));
        return grouped_name(names[static_cast<std::size_t>(type_index)]);
    }

    int size() const { return static_cast<int>(names.size()); }
    bool operator==(const TypeVocabulary&) const = default;
};

// The four classes the synthetic generator emits.
inline TypeVocabulary extrude_vocabulary() {
    return TypeVocabulary{{"extrude_side", "extrude_end", "cut_extrude_side", "cut_extrude_end"}};
}

// Full eleven-class list for externally produced data.
inline TypeVocabulary full_vocabulary() {
    return TypeVocabulary{{"extrude_side", "extrude_end", "revolve_side", "revolve_end",
                           "cut_extrude_side", "cut_extrude_end", "cut_revolve_side",
                           "cut_revolve_end", "fillet", "chamfer", "other"}};
}

struct BRep {
    std::string name;
    TypeVocabulary vocabulary;
    std::vector<Face> faces;
    std::vector<Edge> edges;
    std::vector<Coedge> coedges;
    BBox scale_info;  // bounding box before normalization, model units

    int n_faces() const { return static_cast<int>(faces.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }
    int n_coedges() const { return static_cast<int>(coedges.size()); }
};

struct Violation {
    std::string rule;
    std::string entity;  // "face" | "edge" | "coedge"
    int id = -1;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {

inline bool coedge_id_ok(const BRep& b, int id) {
    return id >= 0 && id < b.n_coedges();
}

}  // namespace detail

// Structural invariant check. Violations are returned as data; an empty
// report means the model is a well-formed winged-edge solid boundary.
inline ValidationReport validate_topology(const BRep& b) {
    ValidationReport rep;
    auto add = [&](const std::string& rule, const std::string& entity, int id,
                   const std::string& detail) {
        rep.violations.push_back({rule, entity, id, detail});
    };

    const int nf = b.n_faces(), ne = b.n_edges(), nc = b.n_coedges();

    for (int i = 0; i < nf; ++i)
        if (b.faces[static_cast<std::size_t>(i)].id != i)
            add("dense ids", "face", b.faces[static_cast<std::size_t>(i)].id,
                "expected id " + std::to_string(i));
    for (int i = 0; i < ne; ++i)
        if (b.edges[static_cast<std::size_t>(i)].id != i)
            add("dense ids", "edge", b.edges[static_cast<std::size_t>(i)].id,
                "expected id " + std::to_string(i));
    for (int i = 0; i < nc; ++i)
        if (b.coedges[static_cast<std::size_t>(i)].id != i)
            add("dense ids", "coedge", b.coedges[static_cast<std::size_t>(i)].id,
                "expected id " + std::to_string(i));
    if (!rep.ok()) return rep;  // cross-reference checks assume dense ids

    for (const Coedge& c : b.coedges) {
        if (c.edge < 0 || c.edge >= ne) add("reference", "coedge", c.id, "edge out of range");
        if (c.face < 0 || c.face >= nf) add("reference", "coedge", c.id, "face out of range");
        for (int ref : {c.next, c.prev, c.mate})
            if (!detail::coedge_id_ok(b, ref)) add("reference", "coedge", c.id, "coedge ref out of range");
    }
    for (const Edge& e : b.edges)
        for (int ref : e.coedges)
            if (!detail::coedge_id_ok(b, ref)) add("reference", "edge", e.id, "coedge ref out of range");
    for (const Face& f : b.faces)
        for (const auto& loop : f.loops)
            for (int ref : loop)
                if (!detail::coedge_id_ok(b, ref)) add("reference", "face", f.id, "coedge ref out of range");
    if (!rep.ok()) return rep;

    auto C = [&](int id) -> const Coedge& { return b.coedges[static_cast<std::size_t>(id)]; };

    for (const Coedge& c : b.coedges) {
        if (c.mate == c.id) add("mate involution", "coedge", c.id, "coedge is its own mate");
        else if (C(c.mate).mate != c.id) add("mate involution", "coedge", c.id, "mate(mate) != self");
        if (C(c.next).prev != c.id) add("loop closure", "coedge", c.id, "prev(next) != self");
        if (C(c.prev).next != c.id) add("loop closure", "coedge", c.id, "next(prev) != self");
        if (c.mate != c.id && c.face == C(c.mate).face)
            add("mate faces", "coedge", c.id, "coedge and mate on the same face");
        if (c.mate != c.id && C(c.mate).edge == c.edge && c.reversed == C(c.mate).reversed)
            add("mate direction", "coedge", c.id, "mate traverses the edge in the same direction");
        const Edge& e = b.edges[static_cast<std::size_t>(c.edge)];
        bool registered = (e.coedges[0] == c.id && e.coedges[1] == c.mate) ||
                          (e.coedges[1] == c.id && e.coedges[0] == c.mate);
        if (!registered) add("edge registration", "coedge", c.id, "edge does not register coedge+mate");
    }

    for (const Edge& e : b.edges) {
        if (e.coedges[0] == e.coedges[1]) add("edge registration", "edge", e.id, "duplicate coedge");
        else if (C(e.coedges[0]).mate != e.coedges[1])
            add("edge registration", "edge", e.id, "registered coedges are not mates");
    }

    // Loop structure: closed cycles, disjointness, face ownership.
    std::vector<int> owner(static_cast<std::size_t>(nc), -1);
    for (const Face& f : b.faces) {
        if (f.loops.empty()) add("empty face", "face", f.id, "face owns no loop");
        for (const auto& loop : f.loops) {
            if (loop.empty()) {
                add("empty loop", "face", f.id, "loop with no coedge");
                continue;
            }
            for (std::size_t i = 0; i < loop.size(); ++i) {
                int cid = loop[i];
                if (owner[static_cast<std::size_t>(cid)] != -1)
                    add("loop disjointness", "coedge", cid, "coedge appears in more than one loop");
                owner[static_cast<std::size_t>(cid)] = f.id;
                if (C(cid).face != f.id)
                    add("loop ownership", "coedge", cid, "coedge face differs from owning face");
                int expected_next = loop[(i + 1) % loop.size()];
                if (C(cid).next != expected_next)
                    add("loop closure", "coedge", cid, "next does not follow loop order");
            }
        }
    }
    for (int cid = 0; cid < nc; ++cid)
        if (owner[static_cast<std::size_t>(cid)] == -1)
            add("loop ownership", "coedge", cid, "coedge not owned by any loop");

    if (nc != 2 * ne) add("counts", "edge", -1, "coedge count != 2 * edge count");

    for (const Face& f : b.faces) {
        if (f.labels) {
            if (f.labels->op_type < 0 || f.labels->op_type >= b.vocabulary.size())
                add("labels", "face", f.id, "op_type outside vocabulary");
            if (f.labels->op_step < 0) add("labels", "face", f.id, "negative op_step");
        }
        const SurfaceGeom& s = f.surface;
        if (s.kind != SurfaceKind::Sphere && s.kind != SurfaceKind::Other &&
            std::abs(norm(s.axis) - 1.0) > 1e-9)
            add("surface", "face", f.id, "direction vector not unit length");
        if ((s.kind == SurfaceKind::Cylinder || s.kind == SurfaceKind::Cone ||
             s.kind == SurfaceKind::Sphere || s.kind == SurfaceKind::Torus) &&
            !(s.radius > 0))
            add("surface", "face", f.id, "non-positive radius");
        if (s.kind == SurfaceKind::Torus && !(s.radius2 > 0))
            add("surface", "face", f.id, "non-positive minor radius");
    }

    return rep;
}

// The topological walk gathered around one coedge: itself, its mate, loop
// neighbours on both sides, the two incident faces and the carrier edge.
struct WalkSet {
    std::array<int, 6> coedges;  // c, mate, next, prev, next(mate), prev(mate)
    std::array<int, 2> faces;    // face(c), face(mate)
    int edge;
};

inline WalkSet kernel_neighborhood(const BRep& b, int coedge_id) {
    if (!detail::coedge_id_ok(b, coedge_id))
        throw IndexError("coedge id " + std::to_string(coedge_id) + " out of range");
    const Coedge& c = b.coedges[static_cast<std::size_t>(coedge_id)];
    const Coedge& m = b.coedges[static_cast<std::size_t>(c.mate)];
    WalkSet w{};
    w.coedges = {c.id, m.id, c.next, c.prev, m.next, m.prev};
    w.faces = {c.face, m.face};
    w.edge = c.edge;
    return w;
}

// Densified per-face step labels. On-disk op_step ids are arbitrary
// non-negative integers; in memory they are remapped to 0..k-1 in ascending
// order of the original ids.
struct DenseSteps {
    std::vector<int> face_step;  // indexed by face id
    int n_steps = 0;
};

inline DenseSteps dense_steps(const BRep& b) {
    std::set<int> ids;
    for (const Face& f : b.faces) {
        if (!f.labels) throw ValueError("face " + std::to_string(f.id) + " has no labels");
        ids.insert(f.labels->op_step);
    }
    std::map<int, int> remap;
    for (int id : ids) remap[id] = static_cast<int>(remap.size());
    DenseSteps out;
    out.n_steps = static_cast<int>(remap.size());
    out.face_step.reserve(b.faces.size());
    for (const Face& f : b.faces) out.face_step.push_back(remap.at(f.labels->op_step));
    return out;
}

inline bool structural_equal(const BRep& a, const BRep& b) {
    if (a.name != b.name || !(a.vocabulary == b.vocabulary)) return false;
    if (a.faces.size() != b.faces.size() || a.edges.size() != b.edges.size() ||
        a.coedges.size() != b.coedges.size())
        return false;
    auto veq = [](const Vec3& p, const Vec3& q) { return p.x == q.x && p.y == q.y && p.z == q.z; };
    for (std::size_t i = 0; i < a.faces.size(); ++i) {
        const Face& f = a.faces[i];
        const Face& g = b.faces[i];
        if (f.id != g.id || f.loops != g.loops || f.labels != g.labels) return false;
        const SurfaceGeom &s = f.surface, &t = g.surface;
        if (s.kind != t.kind || !veq(s.origin, t.origin) || !veq(s.axis, t.axis) ||
            s.radius != t.radius || s.radius2 != t.radius2 || s.half_angle != t.half_angle ||
            s.uv_domain != t.uv_domain)
            return false;
    }
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        const Edge& e = a.edges[i];
        const Edge& f = b.edges[i];
        if (e.id != f.id || e.coedges != f.coedges || e.convexity != f.convexity ||
            e.closed != f.closed)
            return false;
        const CurveGeom &c = e.curve, &d = f.curve;
        if (c.kind != d.kind || !veq(c.start, d.start) || !veq(c.end, d.end) ||
            !veq(c.center, d.center) || !veq(c.axis, d.axis) || c.radius != d.radius ||
            c.angle0 != d.angle0 || c.angle1 != d.angle1 || c.other_length != d.other_length)
            return false;
        if (c.samples.size() != d.samples.size()) return false;
        for (std::size_t k = 0; k < c.samples.size(); ++k)
            if (!veq(c.samples[k], d.samples[k])) return false;
    }
    for (std::size_t i = 0; i < a.coedges.size(); ++i) {
        const Coedge& c = a.coedges[i];
        const Coedge& d = b.coedges[i];
        if (c.id != d.id || c.edge != d.edge || c.face != d.face || c.next != d.next ||
            c.prev != d.prev || c.mate != d.mate || c.reversed != d.reversed)
            return false;
    }
    return true;
}

}  // namespace cadops
