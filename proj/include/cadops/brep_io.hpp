#pragma once

#include <json.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "cadops/brep.hpp"
#include "cadops/errors.hpp"
#include "cadops/jsonio.hpp"

namespace cadops {

// Point on an edge curve at normalized parameter t in [0, 1]. "other" curves
// interpolate their stored polyline by segment index.
inline Vec3 curve_point(const CurveGeom& c, double t) {
    switch (c.kind) {
        case CurveKind::Line:
            return c.start + (c.end - c.start) * t;
        case CurveKind::Arc: {
            auto basis = plane_basis(c.axis);
            double a = c.angle0 + (c.angle1 - c.angle0) * t;
            return c.center + (basis[0] * std::cos(a) + basis[1] * std::sin(a)) * c.radius;
        }
        default: {
            if (c.samples.size() < 2) throw ValueError("curve samples underspecified");
            double s = t * static_cast<double>(c.samples.size() - 1);
            auto i = static_cast<std::size_t>(
                std::min(s, static_cast<double>(c.samples.size() - 2)));
            double f = s - static_cast<double>(i);
            return c.samples[i] + (c.samples[i + 1] - c.samples[i]) * f;
        }
    }
}

inline double curve_length(const CurveGeom& c) {
    switch (c.kind) {
        case CurveKind::Line:
            return norm(c.end - c.start);
        case CurveKind::Arc:
            return c.radius * std::abs(c.angle1 - c.angle0);
        default: {
            double len = 0;
            for (std::size_t i = 0; i + 1 < c.samples.size(); ++i)
                len += norm(c.samples[i + 1] - c.samples[i]);
            return len;
        }
    }
}

inline BBox model_bbox(const BRep& b) {
    BBox box;
    for (const Edge& e : b.edges) {
        const int k = e.curve.kind == CurveKind::Line ? 2 : 9;
        for (int i = 0; i < k; ++i)
            box.expand(curve_point(e.curve, k == 1 ? 0.0 : static_cast<double>(i) / (k - 1)));
    }
    return box;
}

namespace detail {

using json = nlohmann::json;

inline const json& require(const json& obj, const char* key, const char* ctx) {
    if (!obj.is_object()) throw SchemaError(std::string(ctx) + ": expected object");
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError(std::string(ctx) + ": missing field '" + key + "'");
    return *it;
}

inline void check_keys(const json& obj, std::initializer_list<const char*> keys,
                       const char* ctx) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) known = true;
        if (!known)
            throw SchemaError(std::string(ctx) + ": unexpected field '" + it.key() + "'");
    }
}

inline double num(const json& j, const char* ctx) {
    if (!j.is_number()) throw SchemaError(std::string(ctx) + ": expected number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(std::string(ctx) + ": non-finite number");
    return v;
}

inline int integer(const json& j, const char* ctx) {
    if (!j.is_number_integer()) throw SchemaError(std::string(ctx) + ": expected integer");
    return j.get<int>();
}

inline Vec3 vec3(const json& j, const char* ctx) {
    if (!j.is_array() || j.size() != 3)
        throw SchemaError(std::string(ctx) + ": expected array of 3 numbers");
    return {num(j[0], ctx), num(j[1], ctx), num(j[2], ctx)};
}

inline SurfaceGeom parse_surface(const json& j, const char* ctx) {
    check_keys(j, {"kind", "params", "uv_domain"}, ctx);
    SurfaceGeom s;
    std::string kind = require(j, "kind", ctx).get<std::string>();
    const json& p = require(j, "params", ctx);
    if (kind == "plane") {
        s.kind = SurfaceKind::Plane;
        check_keys(p, {"origin", "normal"}, ctx);
        s.origin = vec3(require(p, "origin", ctx), ctx);
        s.axis = vec3(require(p, "normal", ctx), ctx);
    } else if (kind == "cylinder") {
        s.kind = SurfaceKind::Cylinder;
        check_keys(p, {"origin", "axis", "radius"}, ctx);
        s.origin = vec3(require(p, "origin", ctx), ctx);
        s.axis = vec3(require(p, "axis", ctx), ctx);
        s.radius = num(require(p, "radius", ctx), ctx);
    } else if (kind == "cone") {
        s.kind = SurfaceKind::Cone;
        check_keys(p, {"origin", "axis", "radius", "half_angle"}, ctx);
        s.origin = vec3(require(p, "origin", ctx), ctx);
        s.axis = vec3(require(p, "axis", ctx), ctx);
        s.radius = num(require(p, "radius", ctx), ctx);
        s.half_angle = num(require(p, "half_angle", ctx), ctx);
    } else if (kind == "sphere") {
        s.kind = SurfaceKind::Sphere;
        check_keys(p, {"origin", "radius"}, ctx);
        s.origin = vec3(require(p, "origin", ctx), ctx);
        s.radius = num(require(p, "radius", ctx), ctx);
    } else if (kind == "torus") {
        s.kind = SurfaceKind::Torus;
        check_keys(p, {"origin", "axis", "major_radius", "minor_radius"}, ctx);
        s.origin = vec3(require(p, "origin", ctx), ctx);
        s.axis = vec3(require(p, "axis", ctx), ctx);
        s.radius = num(require(p, "major_radius", ctx), ctx);
        s.radius2 = num(require(p, "minor_radius", ctx), ctx);
    } else if (kind == "other") {
        s.kind = SurfaceKind::Other;
    } else {
        throw SchemaError(std::string(ctx) + ": unknown surface kind '" + kind + "'");
    }
    const json& d = require(j, "uv_domain", ctx);
    if (!d.is_array() || d.size() != 4)
        throw SchemaError(std::string(ctx) + ": uv_domain must have 4 numbers");
    for (int k = 0; k < 4; ++k) s.uv_domain[static_cast<std::size_t>(k)] = num(d[static_cast<std::size_t>(k)], ctx);
    return s;
}

inline CurveGeom parse_curve(const json& j, const char* ctx) {
    check_keys(j, {"kind", "params"}, ctx);
    CurveGeom c;
    std::string kind = require(j, "kind", ctx).get<std::string>();
    const json& p = require(j, "params", ctx);
    if (kind == "line") {
        c.kind = CurveKind::Line;
        check_keys(p, {"start", "end"}, ctx);
        c.start = vec3(require(p, "start", ctx), ctx);
        c.end = vec3(require(p, "end", ctx), ctx);
    } else if (kind == "arc") {
        c.kind = CurveKind::Arc;
        check_keys(p, {"center", "axis", "radius", "angle0", "angle1"}, ctx);
        c.center = vec3(require(p, "center", ctx), ctx);
        c.axis = vec3(require(p, "axis", ctx), ctx);
        c.radius = num(require(p, "radius", ctx), ctx);
        c.angle0 = num(require(p, "angle0", ctx), ctx);
        c.angle1 = num(require(p, "angle1", ctx), ctx);
    } else if (kind == "other") {
        c.kind = CurveKind::Other;
        check_keys(p, {"samples"}, ctx);
        const json& samples = require(p, "samples", ctx);
        if (!samples.is_array() || samples.size() < 2)
            throw SchemaError(std::string(ctx) + ": 'other' curve needs >= 2 samples");
        for (const auto& s : samples) c.samples.push_back(vec3(s, ctx));
        c.other_length = curve_length(c);
    } else {
        throw SchemaError(std::string(ctx) + ": unknown curve kind '" + kind + "'");
    }
    return c;
}

}  // namespace detail

// Parse without enforcing topology. Used by the validate command so that a
// broken model can still be reported violation by violation.
inline BRep parse_brep_unchecked(const std::string& text) {
    using detail::check_keys;
    using detail::integer;
    using detail::require;
    using json = nlohmann::json;

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SyntaxError(e.what(), e.byte);
    }
    if (!doc.is_object()) throw SchemaError("top level: expected object");
    check_keys(doc, {"format_version", "name", "vocabulary", "faces", "edges", "coedges"},
               "top level");
    const json& ver = require(doc, "format_version", "top level");
    if (!ver.is_string() || ver.get<std::string>() != "1")
        throw SchemaError("top level: unsupported format_version");

    BRep b;
    b.name = require(doc, "name", "top level").get<std::string>();
    const json& vocab = require(doc, "vocabulary", "top level");
    if (!vocab.is_array() || vocab.empty())
        throw SchemaError("vocabulary: expected non-empty array of strings");
    for (const auto& v : vocab) {
        if (!v.is_string()) throw SchemaError("vocabulary: expected string entries");
        b.vocabulary.names.push_back(v.get<std::string>());
    }

    const json& faces = require(doc, "faces", "top level");
    if (!faces.is_array()) throw SchemaError("faces: expected array");
    for (const auto& jf : faces) {
        check_keys(jf, {"id", "surface", "loops", "labels"}, "face");
        Face f;
        f.id = integer(require(jf, "id", "face"), "face.id");
        f.surface = detail::parse_surface(require(jf, "surface", "face"), "face.surface");
        const json& loops = require(jf, "loops", "face");
        if (!loops.is_array()) throw SchemaError("face.loops: expected array");
        for (const auto& jl : loops) {
            if (!jl.is_array()) throw SchemaError("face.loops: expected array of arrays");
            std::vector<int> loop;
            for (const auto& cid : jl) loop.push_back(integer(cid, "face.loops"));
            f.loops.push_back(std::move(loop));
        }
        const json& labels = require(jf, "labels", "face");
        if (!labels.is_null()) {
            check_keys(labels, {"op_type", "op_step"}, "face.labels");
            FaceLabels fl;
            fl.op_type = integer(require(labels, "op_type", "face.labels"), "face.labels");
            fl.op_step = integer(require(labels, "op_step", "face.labels"), "face.labels");
            f.labels = fl;
        }
        b.faces.push_back(std::move(f));
    }

    const json& edges = require(doc, "edges", "top level");
    if (!edges.is_array()) throw SchemaError("edges: expected array");
    for (const auto& je : edges) {
        check_keys(je, {"id", "curve", "coedges", "convexity", "closed"}, "edge");
        Edge e;
        e.id = integer(require(je, "id", "edge"), "edge.id");
        e.curve = detail::parse_curve(require(je, "curve", "edge"), "edge.curve");
        const json& ce = require(je, "coedges", "edge");
        if (!ce.is_array() || ce.size() != 2)
            throw SchemaError("edge.coedges: expected exactly 2 coedge ids");
        e.coedges = {integer(ce[0], "edge.coedges"), integer(ce[1], "edge.coedges")};
        std::string conv = require(je, "convexity", "edge").get<std::string>();
        if (conv == "convex") e.convexity = Convexity::Convex;
        else if (conv == "concave") e.convexity = Convexity::Concave;
        else if (conv == "smooth") e.convexity = Convexity::Smooth;
        else throw SchemaError("edge.convexity: unknown value '" + conv + "'");
        const json& closed = require(je, "closed", "edge");
        if (!closed.is_boolean()) throw SchemaError("edge.closed: expected boolean");
        e.closed = closed.get<bool>();
        b.edges.push_back(std::move(e));
    }

    const json& coedges = require(doc, "coedges", "top level");
    if (!coedges.is_array()) throw SchemaError("coedges: expected array");
    for (const auto& jc : coedges) {
        check_keys(jc, {"id", "edge", "face", "next", "prev", "mate", "reversed"}, "coedge");
        Coedge c;
        c.id = integer(require(jc, "id", "coedge"), "coedge.id");
        c.edge = integer(require(jc, "edge", "coedge"), "coedge.edge");
        c.face = integer(require(jc, "face", "coedge"), "coedge.face");
        c.next = integer(require(jc, "next", "coedge"), "coedge.next");
        c.prev = integer(require(jc, "prev", "coedge"), "coedge.prev");
        c.mate = integer(require(jc, "mate", "coedge"), "coedge.mate");
        const json& rev = require(jc, "reversed", "coedge");
        if (!rev.is_boolean()) throw SchemaError("coedge.reversed: expected boolean");
        c.reversed = rev.get<bool>();
        b.coedges.push_back(std::move(c));
    }

    auto by_id = [](const auto& x, const auto& y) { return x.id < y.id; };
    std::sort(b.faces.begin(), b.faces.end(), by_id);
    std::sort(b.edges.begin(), b.edges.end(), by_id);
    std::sort(b.coedges.begin(), b.coedges.end(), by_id);

    b.scale_info = model_bbox(b);
    return b;
}

inline BRep parse_brep(const std::string& text) {
    BRep b = parse_brep_unchecked(text);
    ValidationReport rep = validate_topology(b);
    if (!rep.ok()) {
        const Violation& v = rep.violations.front();
        throw TopologyError(v.rule + ": " + v.entity + " " + std::to_string(v.id) +
                            (v.detail.empty() ? "" : " (" + v.detail + ")"));
    }
    return b;
}

namespace detail {

inline std::string surface_json(const SurfaceGeom& s) {
    std::string p;
    switch (s.kind) {
        case SurfaceKind::Plane:
            p = "{\"origin\": " + fmt_vec3(s.origin) + ", \"normal\": " + fmt_vec3(s.axis) + "}";
            break;
        case SurfaceKind::Cylinder:
            p = "{\"origin\": " + fmt_vec3(s.origin) + ", \"axis\": " + fmt_vec3(s.axis) +
                ", \"radius\": " + fmt_double(s.radius) + "}";
            break;
        case SurfaceKind::Cone:
            p = "{\"origin\": " + fmt_vec3(s.origin) + ", \"axis\": " + fmt_vec3(s.axis) +
                ", \"radius\": " + fmt_double(s.radius) +
                ", \"half_angle\": " + fmt_double(s.half_angle) + "}";
            break;
        case SurfaceKind::Sphere:
            p = "{\"origin\": " + fmt_vec3(s.origin) + ", \"radius\": " + fmt_double(s.radius) + "}";
            break;
        case SurfaceKind::Torus:
            p = "{\"origin\": " + fmt_vec3(s.origin) + ", \"axis\": " + fmt_vec3(s.axis) +
                ", \"major_radius\": " + fmt_double(s.radius) +
                ", \"minor_radius\": " + fmt_double(s.radius2) + "}";
            break;
        default:
            p = "{}";
    }
    std::vector<double> dom(s.uv_domain.begin(), s.uv_domain.end());
    return "{\"kind\": " + json_str(to_string(s.kind)) + ", \"params\": " + p +
           ", \"uv_domain\": " + json_double_array(dom) + "}";
}

inline std::string curve_json(const CurveGeom& c) {
    std::string p;
    switch (c.kind) {
        case CurveKind::Line:
            p = "{\"start\": " + fmt_vec3(c.start) + ", \"end\": " + fmt_vec3(c.end) + "}";
            break;
        case CurveKind::Arc:
            p = "{\"center\": " + fmt_vec3(c.center) + ", \"axis\": " + fmt_vec3(c.axis) +
                ", \"radius\": " + fmt_double(c.radius) + ", \"angle0\": " + fmt_double(c.angle0) +
                ", \"angle1\": " + fmt_double(c.angle1) + "}";
            break;
        default: {
            p = "{\"samples\": [";
            for (std::size_t i = 0; i < c.samples.size(); ++i) {
                if (i) p += ", ";
                p += fmt_vec3(c.samples[i]);
            }
            p += "]}";
        }
    }
    return "{\"kind\": " + json_str(to_string(c.kind)) + ", \"params\": " + p + "}";
}

}  // namespace detail

// Canonical form: schema key order, entities ordered by id, one entity per
// line, every float at 17 significant digits. Serializing the same model
// twice yields identical bytes.
inline std::string serialize_brep(const BRep& b) {
    std::string out;
    out += "{\n";
    out += "  \"format_version\": \"1\",\n";
    out += "  \"name\": " + json_str(b.name) + ",\n";
    out += "  \"vocabulary\": [";
    for (std::size_t i = 0; i < b.vocabulary.names.size(); ++i) {
        if (i) out += ", ";
        out += json_str(b.vocabulary.names[i]);
    }
    out += "],\n";

    out += "  \"faces\": [\n";
    for (std::size_t i = 0; i < b.faces.size(); ++i) {
        const Face& f = b.faces[i];
        out += "    {\"id\": " + std::to_string(f.id) +
               ", \"surface\": " + detail::surface_json(f.surface) + ", \"loops\": [";
        for (std::size_t l = 0; l < f.loops.size(); ++l) {
            if (l) out += ", ";
            out += json_int_array(f.loops[l]);
        }
        out += "], \"labels\": ";
        if (f.labels)
            out += "{\"op_type\": " + std::to_string(f.labels->op_type) +
                   ", \"op_step\": " + std::to_string(f.labels->op_step) + "}";
        else
            out += "null";
        out += "}";
        out += (i + 1 < b.faces.size()) ? ",\n" : "\n";
    }
    out += "  ],\n";

    out += "  \"edges\": [\n";
    for (std::size_t i = 0; i < b.edges.size(); ++i) {
        const Edge& e = b.edges[i];
        out += "    {\"id\": " + std::to_string(e.id) +
               ", \"curve\": " + detail::curve_json(e.curve) + ", \"coedges\": [" +
               std::to_string(e.coedges[0]) + ", " + std::to_string(e.coedges[1]) +
               "], \"convexity\": " + json_str(to_string(e.convexity)) +
               ", \"closed\": " + (e.closed ? "true" : "false") + "}";
        out += (i + 1 < b.edges.size()) ? ",\n" : "\n";
    }
    out += "  ],\n";

    out += "  \"coedges\": [\n";
    for (std::size_t i = 0; i < b.coedges.size(); ++i) {
        const Coedge& c = b.coedges[i];
        out += "    {\"id\": " + std::to_string(c.id) + ", \"edge\": " + std::to_string(c.edge) +
               ", \"face\": " + std::to_string(c.face) + ", \"next\": " + std::to_string(c.next) +
               ", \"prev\": " + std::to_string(c.prev) + ", \"mate\": " + std::to_string(c.mate) +
               ", \"reversed\": " + (c.reversed ? "true" : "false") + "}";
        out += (i + 1 < b.coedges.size()) ? ",\n" : "\n";
    }
    out += "  ]\n";
    out += "}\n";
    return out;
}

inline BRep load_brep(const std::string& path) { return parse_brep(read_file(path)); }

inline void save_brep(const BRep& b, const std::string& path) {
    write_file(path, serialize_brep(b));
}

}  // namespace cadops
