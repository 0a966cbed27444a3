#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cadops/features.hpp"
#include "cadops/heads.hpp"

namespace cadops {

struct Sketch {
    int step_id = 0;
    Vec3 axis{0, 0, 1};   // unit extrusion axis estimate
    Vec3 origin;          // projection center (normalized coordinates)
    Vec3 basis_u, basis_v;
    std::vector<std::vector<std::array<double, 2>>> chains;  // one polyline per boundary edge
    std::vector<std::array<double, 2>> grid_points;          // only with project_grid
    std::vector<int> source_faces;
    std::string status = "ok";  // ok | axis_fallback | degenerate
};

struct SketchOptions {
    bool include_cuts = false;
    bool project_grid = false;
    int grid_resolution = 5;
};

// Face ids predicted as extrusion side walls, keyed by predicted step.
inline std::map<int, std::vector<int>> group_extrude_sides(const Prediction& pred,
                                                           const TypeVocabulary& vocab,
                                                           bool include_cuts) {
    auto qualifies = [&](int t) {
        const std::string& name = vocab.names.at(static_cast<std::size_t>(t));
        if (name.size() < 5 || name.compare(name.size() - 5, 5, "_side") != 0) return false;
        std::string group = TypeVocabulary::grouped_name(name);
        return group == "extrude" || (include_cuts && group == "cut_extrude");
    };
    std::map<int, std::vector<int>> groups;
    for (std::size_t f = 0; f < pred.type_labels.size(); ++f)
        if (qualifies(pred.type_labels[f]))
            groups[pred.step_labels[f]].push_back(static_cast<int>(f));
    return groups;
}

// Sum of normalized pairwise cross products, each sign-aligned with the
// first non-parallel pair so symmetric wall sets do not cancel.
inline Vec3 extrusion_axis(const std::vector<Vec3>& normals) {
    Vec3 sum;
    bool have_ref = false;
    Vec3 ref;
    for (std::size_t i = 0; i < normals.size(); ++i) {
        for (std::size_t j = i + 1; j < normals.size(); ++j) {
            Vec3 c = cross(normals[i], normals[j]);
            double n = norm(c);
            if (n <= 1e-8) continue;
            Vec3 term = c / n;
            if (!have_ref) {
                ref = term;
                have_ref = true;
            } else if (dot(term, ref) < 0) {
                term = term * -1.0;
            }
            sum += term;
        }
    }
    if (!have_ref) throw DegenerateAxis("all side normals are parallel");
    return normalized(sum);
}

// Area-weighted centroid of the member faces' UV-grid samples.
inline Vec3 projection_origin(const BRep& b, const std::vector<int>& face_ids, int grid_res) {
    if (face_ids.empty()) throw ValueError("projection_origin: empty face set");
    Vec3 acc;
    double total_area = 0;
    for (int fid : face_ids) {
        const Face& f = b.faces.at(static_cast<std::size_t>(fid));
        double area = face_area(b, f);
        UVGrid g = sample_uv_grid(f, grid_res);
        double w = area / static_cast<double>(g.points.size());
        for (const Vec3& p : g.points) acc += p * w;
        total_area += area;
    }
    return acc / total_area;
}

inline Vec3 face_normal_estimate(const Face& f) {
    const SurfaceGeom& s = f.surface;
    if (s.kind == SurfaceKind::Plane) return s.axis;
    double u = 0.5 * (s.uv_domain[0] + s.uv_domain[1]);
    double v = 0.5 * (s.uv_domain[2] + s.uv_domain[3]);
    return surface_normal(s, u, v);
}

// Recovers one 2D profile per predicted step from the faces predicted as
// extrusion sides: estimate the axis from wall normals, project the walls'
// boundary edges onto the orthogonal plane through the group centroid.
// Works on the normalized model.
inline std::vector<Sketch> recover_sketches(const BRep& raw, const Prediction& pred,
                                            const SketchOptions& opt) {
    if (static_cast<int>(pred.type_labels.size()) != raw.n_faces())
        throw ShapeError("prediction does not cover all faces");
    const BRep b = normalize_model(raw).brep;

    auto groups = group_extrude_sides(pred, b.vocabulary, opt.include_cuts);
    std::vector<Sketch> out;
    for (const auto& [step, face_ids] : groups) {
        Sketch sk;
        sk.step_id = step;
        sk.source_faces = face_ids;

        std::vector<Vec3> normals;
        for (int fid : face_ids)
            normals.push_back(face_normal_estimate(b.faces.at(static_cast<std::size_t>(fid))));

        bool have_axis = true;
        try {
            sk.axis = extrusion_axis(normals);
        } catch (const DegenerateAxis&) {
            // fall back to the longest straight edge shared by two group faces
            std::set<int> in_group(face_ids.begin(), face_ids.end());
            double best_len = 0;
            const Edge* best = nullptr;
            for (const Edge& e : b.edges) {
                if (e.curve.kind != CurveKind::Line) continue;
                int f0 = b.coedges[static_cast<std::size_t>(e.coedges[0])].face;
                int f1 = b.coedges[static_cast<std::size_t>(e.coedges[1])].face;
                if (!in_group.count(f0) || !in_group.count(f1)) continue;
                double len = curve_length(e.curve);
                if (len > best_len) {
                    best_len = len;
                    best = &e;
                }
            }
            if (best) {
                sk.axis = normalized(best->curve.end - best->curve.start);
                sk.status = "axis_fallback";
            } else {
                sk.status = "degenerate";
                have_axis = false;
            }
        }

        sk.origin = projection_origin(b, face_ids, opt.grid_resolution);
        if (!have_axis) {
            out.push_back(std::move(sk));
            continue;
        }

        auto basis = plane_basis(sk.axis);
        sk.basis_u = basis[0];
        sk.basis_v = basis[1];
        auto project = [&](const Vec3& p) {
            return project_to_plane(p, sk.origin, sk.basis_u, sk.basis_v);
        };

        std::set<int> edges_done;
        for (int fid : face_ids) {
            const Face& f = b.faces.at(static_cast<std::size_t>(fid));
            for (const auto& loop : f.loops) {
                for (int cid : loop) {
                    int eid = b.coedges[static_cast<std::size_t>(cid)].edge;
                    if (!edges_done.insert(eid).second) continue;
                    const CurveGeom& curve = b.edges[static_cast<std::size_t>(eid)].curve;
                    std::vector<std::array<double, 2>> chain;
                    if (curve.kind == CurveKind::Line) {
                        chain = {project(curve.start), project(curve.end)};
                    } else {
                        for (int i = 0; i < 16; ++i)
                            chain.push_back(project(curve_point(curve, i / 15.0)));
                    }
                    sk.chains.push_back(std::move(chain));
                }
            }
            if (opt.project_grid) {
                UVGrid g = sample_uv_grid(f, opt.grid_resolution);
                for (const Vec3& p : g.points) sk.grid_points.push_back(project(p));
            }
        }
        out.push_back(std::move(sk));
    }
    return out;
}

namespace sketch_detail {

// display coordinates, deterministic but not round-trip precision
inline std::string fmt_g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace sketch_detail

// Fitted square viewBox with a 5% margin, one path per chain.
inline std::string export_svg(const Sketch& sk) {
    if (sk.chains.empty()) throw EmptySketch("sketch for step " + std::to_string(sk.step_id) +
                                             " has no segments");
    double x0 = sk.chains[0][0][0], x1 = x0, y0 = sk.chains[0][0][1], y1 = y0;
    for (const auto& chain : sk.chains)
        for (const auto& p : chain) {
            x0 = std::min(x0, p[0]);
            x1 = std::max(x1, p[0]);
            y0 = std::min(y0, p[1]);
            y1 = std::max(y1, p[1]);
        }
    for (const auto& p : sk.grid_points) {
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
    }
    double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    double he = 0.5 * std::max(x1 - x0, y1 - y0);
    if (!(he > 0)) he = 1.0;
    double lo_x = cx - 1.05 * he, lo_y = cy - 1.05 * he, side = 2.1 * he;

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + sketch_detail::fmt_g6(lo_x) + " " +
           sketch_detail::fmt_g6(lo_y) + " " + sketch_detail::fmt_g6(side) + " " + sketch_detail::fmt_g6(side) + "\">\n";
    std::string stroke = sketch_detail::fmt_g6(0.01 * side);
    for (const auto& chain : sk.chains) {
        svg += "  <path fill=\"none\" stroke=\"black\" stroke-width=\"" + stroke + "\" d=\"";
        for (std::size_t i = 0; i < chain.size(); ++i) {
            svg += (i == 0 ? "M " : "L ");
            svg += sketch_detail::fmt_g6(chain[i][0]) + " " + sketch_detail::fmt_g6(chain[i][1]) + " ";
        }
        svg += "\"/>\n";
    }
    for (const auto& p : sk.grid_points)
        svg += "  <circle cx=\"" + sketch_detail::fmt_g6(p[0]) + "\" cy=\"" + sketch_detail::fmt_g6(p[1]) +
               "\" r=\"" + stroke + "\" fill=\"black\"/>\n";
    svg += "</svg>\n";
    return svg;
}

inline std::string sketches_meta_json(const std::string& model, const std::vector<Sketch>& sketches,
                                      const std::vector<std::string>& svg_files,
                                      const Provenance& prov) {
    std::string out = "{\n  \"format_version\": \"1\",\n";
    out += "  \"provenance\": " + prov.to_json() + ",\n";
    out += "  \"model\": " + json_str(model) + ",\n";
    out += "  \"sketches\": [\n";
    for (std::size_t i = 0; i < sketches.size(); ++i) {
        const Sketch& s = sketches[i];
        std::size_t nseg = 0;
        for (const auto& c : s.chains) nseg += c.size() > 0 ? c.size() - 1 : 0;
        out += "    {\"step\": " + std::to_string(s.step_id) + ", \"status\": " + json_str(s.status) +
               ", \"axis\": " + fmt_vec3(s.axis) + ", \"origin\": " + fmt_vec3(s.origin) +
               ", \"segments\": " + std::to_string(nseg) + ", \"svg\": " +
               (svg_files[i].empty() ? "null" : json_str(svg_files[i])) +
               ", \"source_faces\": " + json_int_array(s.source_faces) + "}";
        out += (i + 1 < sketches.size()) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

}  // namespace cadops
