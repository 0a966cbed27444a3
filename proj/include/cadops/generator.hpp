#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cadops/brep.hpp"
#include "cadops/brep_io.hpp"
#include "cadops/errors.hpp"
#include "cadops/rng.hpp"
#include "cadops/version.hpp"

namespace cadops {

enum class ProfileShape { Rect, ConvexPolygon };

struct GenParams {
    std::uint64_t seed = 0;
    int n_models = 1;
    int steps_min = 1;
    int steps_max = 4;
    ProfileShape profile = ProfileShape::ConvexPolygon;
    bool allow_cut = true;
    int ks_cap = 16;

    void validate() const {
        if (!(1 <= steps_min && steps_min <= steps_max && steps_max <= ks_cap))
            throw ValueError("GenParams: need 1 <= steps_min <= steps_max <= ks_cap");
        if (n_models < 0) throw ValueError("GenParams: negative model count");
    }
};

// ---------------------------------------------------------------------------
// Planar face-soup assembly. Each face arrives as a plane plus boundary
// loops; shared boundary vertices must be bitwise-identical points. The
// assembler derives vertices, edges, coedges, mates, convexity and per-face
// uv domains, producing a fully linked solid boundary.
// ---------------------------------------------------------------------------

struct FaceSpec {
    Vec3 normal;                          // unit outward normal
    Vec3 origin;                          // plane reference point
    std::vector<std::vector<Vec3>> loops; // [0] outer CCW wrt normal, others CW (holes)
    std::optional<FaceLabels> labels;
};

inline BRep assemble_planar_solid(const std::vector<FaceSpec>& specs, const std::string& name,
                                  const TypeVocabulary& vocab) {
    BRep b;
    b.name = name;
    b.vocabulary = vocab;

    std::map<std::tuple<double, double, double>, int> vertex_ids;
    std::vector<Vec3> vertex_pos;
    auto vid = [&](const Vec3& p) {
        auto key = std::make_tuple(p.x, p.y, p.z);
        auto it = vertex_ids.find(key);
        if (it != vertex_ids.end()) return it->second;
        int id = static_cast<int>(vertex_pos.size());
        vertex_ids.emplace(key, id);
        vertex_pos.push_back(p);
        return id;
    };

    struct EdgeUse {
        int coedge;
        bool from_lower;  // traverses min(vid) -> max(vid)
    };
    std::map<std::pair<int, int>, int> edge_ids;
    std::vector<std::vector<EdgeUse>> edge_uses;
    std::vector<std::pair<int, int>> edge_verts;

    for (std::size_t fi = 0; fi < specs.size(); ++fi) {
        const FaceSpec& spec = specs[fi];
        Face face;
        face.id = static_cast<int>(fi);
        face.labels = spec.labels;
        face.surface.kind = SurfaceKind::Plane;
        face.surface.origin = spec.origin;
        face.surface.axis = spec.normal;

        for (const auto& loop_pts : spec.loops) {
            if (loop_pts.size() < 3) throw TopologyError("assembly: loop with fewer than 3 points");
            std::vector<int> loop;
            const std::size_t n = loop_pts.size();
            for (std::size_t i = 0; i < n; ++i) {
                int va = vid(loop_pts[i]);
                int vb = vid(loop_pts[(i + 1) % n]);
                if (va == vb) throw TopologyError("assembly: zero-length boundary segment");
                auto key = std::minmax(va, vb);
                auto [it, inserted] = edge_ids.try_emplace({key.first, key.second},
                                                           static_cast<int>(edge_uses.size()));
                if (inserted) {
                    edge_uses.emplace_back();
                    edge_verts.emplace_back(key.first, key.second);
                }
                int eid = it->second;
                Coedge c;
                c.id = b.n_coedges();
                c.edge = eid;
                c.face = face.id;
                c.reversed = (va != key.first);
                b.coedges.push_back(c);
                edge_uses[static_cast<std::size_t>(eid)].push_back({c.id, va == key.first});
                loop.push_back(c.id);
            }
            // close the cycle
            for (std::size_t i = 0; i < loop.size(); ++i) {
                Coedge& c = b.coedges[static_cast<std::size_t>(loop[i])];
                c.next = loop[(i + 1) % loop.size()];
                c.prev = loop[(i + loop.size() - 1) % loop.size()];
            }
            face.loops.push_back(std::move(loop));
        }

        // uv domain covers the outer loop in the derived plane basis
        auto basis = plane_basis(spec.normal);
        double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
        bool first = true;
        for (const Vec3& p : spec.loops[0]) {
            auto uv = project_to_plane(p, spec.origin, basis[0], basis[1]);
            if (first) {
                u0 = u1 = uv[0];
                v0 = v1 = uv[1];
                first = false;
            } else {
                u0 = std::min(u0, uv[0]);
                u1 = std::max(u1, uv[0]);
                v0 = std::min(v0, uv[1]);
                v1 = std::max(v1, uv[1]);
            }
        }
        face.surface.uv_domain = {u0, u1, v0, v1};
        b.faces.push_back(std::move(face));
    }

    for (std::size_t eid = 0; eid < edge_uses.size(); ++eid) {
        const auto& uses = edge_uses[eid];
        if (uses.size() != 2)
            throw TopologyError("assembly: edge " + std::to_string(eid) + " used " +
                                std::to_string(uses.size()) + " times (expected 2)");
        if (uses[0].from_lower == uses[1].from_lower)
            throw TopologyError("assembly: edge " + std::to_string(eid) +
                                " traversed twice in the same direction");
        Edge e;
        e.id = static_cast<int>(eid);
        e.coedges = {uses[0].coedge, uses[1].coedge};
        e.curve.kind = CurveKind::Line;
        e.curve.start = vertex_pos[static_cast<std::size_t>(edge_verts[eid].first)];
        e.curve.end = vertex_pos[static_cast<std::size_t>(edge_verts[eid].second)];
        e.closed = false;

        Coedge& c0 = b.coedges[static_cast<std::size_t>(uses[0].coedge)];
        Coedge& c1 = b.coedges[static_cast<std::size_t>(uses[1].coedge)];
        c0.mate = c1.id;
        c1.mate = c0.id;

        // dihedral sign: cross of the two face normals against the first
        // coedge direction
        Vec3 dir = normalized(e.curve.end - e.curve.start);
        if (!uses[0].from_lower) dir = dir * -1.0;
        const Vec3& n0 = specs[static_cast<std::size_t>(c0.face)].normal;
        const Vec3& n1 = specs[static_cast<std::size_t>(c1.face)].normal;
        double sign = dot(cross(n0, n1), dir);
        e.convexity = sign > 1e-9 ? Convexity::Convex
                                  : (sign < -1e-9 ? Convexity::Concave : Convexity::Smooth);
        b.edges.push_back(std::move(e));
    }

    b.scale_info = model_bbox(b);
    return b;
}

// ---------------------------------------------------------------------------
// Procedural extrude-family models
// ---------------------------------------------------------------------------

// Ground truth of one construction step, kept for tests and sketch checks.
struct StepRecipe {
    int step = 0;
    bool is_cut = false;
    std::vector<Vec3> footprint;  // base profile polygon, model units
    Vec3 axis{0, 0, 1};           // extrusion direction
    double height = 0;
};

struct GeneratedModel {
    BRep brep;
    std::vector<StepRecipe> recipe;
};

namespace gendetail {

// 2D footprint polygon centered at the origin, CCW, circumradius exactly r.
inline std::vector<std::array<double, 2>> make_profile(SplitMix64& rng, ProfileShape shape,
                                                       double r) {
    std::vector<std::array<double, 2>> pts;
    if (shape == ProfileShape::Rect) {
        double t = rng.next_uniform(0.5, 1.05);  // aspect angle
        double a = r * std::cos(t), bb = r * std::sin(t);
        double phi = rng.next_uniform(0.0, 3.141592653589793);
        double cs = std::cos(phi), sn = std::sin(phi);
        auto rot = [&](double x, double y) -> std::array<double, 2> {
            return {cs * x - sn * y, sn * x + cs * y};
        };
        pts = {rot(-a, -bb), rot(a, -bb), rot(a, bb), rot(-a, bb)};
    } else {
        int k = static_cast<int>(rng.next_range(3, 8));
        const double tau = 6.283185307179586;
        for (int j = 0; j < k; ++j) {
            double theta = tau * (j + 0.2 + 0.6 * rng.next_double()) / k;
            pts.push_back({r * std::cos(theta), r * std::sin(theta)});
        }
    }
    return pts;
}

inline std::array<double, 2> centroid2(const std::vector<std::array<double, 2>>& poly) {
    double x = 0, y = 0;
    for (const auto& p : poly) {
        x += p[0];
        y += p[1];
    }
    double n = static_cast<double>(poly.size());
    return {x / n, y / n};
}

// Smallest distance from an interior point to the polygon boundary.
inline double clearance2(const std::vector<std::array<double, 2>>& poly,
                         const std::array<double, 2>& c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i)
        best = std::min(best, point_segment_distance_2d(c, poly[i], poly[(i + 1) % poly.size()]));
    return best;
}

struct Cap {
    std::size_t spec_index;                     // parent face in the spec list
    double z;
    int nz;                                     // outward normal sign
    std::vector<std::array<double, 2>> outer;   // CCW as seen from +z
    std::array<double, 2> centroid;
    double clearance;
    std::vector<std::array<double, 3>> hole_disks;  // x, y, circumradius
    double pocket_budget;
    bool hosts_bosses;
};

inline std::vector<Vec3> lift(const std::vector<std::array<double, 2>>& poly, double z) {
    std::vector<Vec3> out;
    out.reserve(poly.size());
    for (const auto& p : poly) out.emplace_back(p[0], p[1], z);
    return out;
}

inline std::vector<Vec3> reversed_loop(std::vector<Vec3> pts) {
    std::reverse(pts.begin(), pts.end());
    return pts;
}

struct PlacementTry {
    std::size_t cap_index;
    std::vector<std::array<double, 2>> poly;  // footprint, absolute 2D coords
    std::array<double, 2> center;
    double circumradius;
};

// One placement attempt: pick an eligible cap, sample a footprint strictly
// inside it, reject on any hole-disk clash.
inline std::optional<PlacementTry> try_place(SplitMix64& rng, const std::vector<Cap>& caps,
                                             bool want_cut, ProfileShape profile) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < caps.size(); ++i)
        if (want_cut || caps[i].hosts_bosses) eligible.push_back(i);
    if (eligible.empty()) return std::nullopt;
    const std::size_t ci = eligible[static_cast<std::size_t>(rng.next_below(eligible.size()))];
    const Cap& cap = caps[ci];

    double margin = 0.05 * cap.clearance;
    double rf = rng.next_uniform(0.25, 0.55) * cap.clearance;
    double avail = cap.clearance - rf - margin;
    double ang = rng.next_uniform(0.0, 6.283185307179586);
    double rad = avail * std::sqrt(rng.next_double());
    std::array<double, 2> q = {cap.centroid[0] + rad * std::cos(ang),
                               cap.centroid[1] + rad * std::sin(ang)};

    for (const auto& disk : cap.hole_disks) {
        double dx = q[0] - disk[0], dy = q[1] - disk[1];
        if (std::sqrt(dx * dx + dy * dy) <= rf + disk[2] + margin) return std::nullopt;
    }

    PlacementTry out;
    out.cap_index = ci;
    out.poly = make_profile(rng, want_cut ? ProfileShape::Rect : profile, rf);
    for (auto& p : out.poly) {
        p[0] += q[0];
        p[1] += q[1];
    }
    out.center = q;
    out.circumradius = rf;
    return out;
}

}  // namespace gendetail

// Builds one labeled model: a base extrusion followed by boss extrusions on
// end faces and rectangular blind pockets cut into cap faces. Footprints are
// placed strictly inside their parent with a margin, pocket depths stay
// within a per-face budget, so the result is a valid non-self-intersecting
// solid by construction.
inline GeneratedModel generate_model_with_recipe(std::uint64_t seed, const GenParams& params,
                                                 const std::string& name = "") {
    params.validate();
    using namespace gendetail;
    SplitMix64 rng(seed);

    const int type_extrude_side = 0, type_extrude_end = 1;
    const int type_cut_side = 2, type_cut_end = 3;

    const int k_steps = static_cast<int>(rng.next_range(params.steps_min, params.steps_max));

    std::vector<FaceSpec> specs;
    std::vector<Cap> caps;
    GeneratedModel out;

    auto add_wall = [&](const Vec3& a, const Vec3& bpt, double dz, bool inward_normal, int op_type,
                        int step) {
        // wall quad over directed horizontal segment a->b, vertical span dz
        Vec3 top_a = {a.x, a.y, a.z + dz};
        Vec3 top_b = {bpt.x, bpt.y, bpt.z + dz};
        Vec3 d = normalized(bpt - a);
        Vec3 n = inward_normal ? Vec3{-d.y, d.x, 0} : Vec3{d.y, -d.x, 0};
        FaceSpec w;
        w.normal = n;
        w.origin = a;
        std::vector<Vec3> loop = {a, bpt, top_b, top_a};
        // this order is CCW wrt the outward horizontal for dz > 0; flip for
        // the other direction, and again when the normal points inward
        bool ccw = inward_normal ? (dz < 0) : (dz > 0);
        if (!ccw) std::reverse(loop.begin(), loop.end());
        w.loops = {std::move(loop)};
        w.labels = FaceLabels{op_type, step};
        specs.push_back(std::move(w));
    };

    // base prism
    {
        double r0 = rng.next_uniform(0.6, 1.2);
        double h0 = rng.next_uniform(0.5, 1.5);
        auto poly = make_profile(rng, params.profile, r0);
        auto base_pts = lift(poly, 0.0);
        auto top_pts = lift(poly, h0);

        FaceSpec bottom;
        bottom.normal = {0, 0, -1};
        bottom.origin = base_pts[0];
        bottom.loops = {reversed_loop(base_pts)};
        bottom.labels = FaceLabels{type_extrude_end, 0};
        std::size_t bottom_idx = specs.size();
        specs.push_back(std::move(bottom));

        FaceSpec top;
        top.normal = {0, 0, 1};
        top.origin = top_pts[0];
        top.loops = {top_pts};
        top.labels = FaceLabels{type_extrude_end, 0};
        std::size_t top_idx = specs.size();
        specs.push_back(std::move(top));

        for (std::size_t i = 0; i < base_pts.size(); ++i)
            add_wall(base_pts[i], base_pts[(i + 1) % base_pts.size()], h0, false,
                     type_extrude_side, 0);

        auto c2 = centroid2(poly);
        caps.push_back({top_idx, h0, +1, poly, c2, clearance2(poly, c2), {}, 0.45 * h0, true});
        caps.push_back({bottom_idx, 0.0, -1, poly, c2, clearance2(poly, c2), {}, 0.45 * h0, true});

        out.recipe.push_back({0, false, base_pts, {0, 0, 1}, h0});
    }

    for (int step = 1; step < k_steps; ++step) {
        bool prefer_cut = params.allow_cut && rng.next_double() < 0.5;

        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            // after half the budget, try the other operation kind as well
            bool want_cut = prefer_cut;
            if (attempt >= 50 && params.allow_cut) want_cut = !prefer_cut;
            auto slot = try_place(rng, caps, want_cut, params.profile);
            if (!slot) continue;

            const std::size_t ci = slot->cap_index;
            const double cap_z = caps[ci].z;
            const double s = caps[ci].nz;
            const double budget = caps[ci].pocket_budget;
            const std::size_t parent_spec = caps[ci].spec_index;
            const std::array<double, 2> q = slot->center;
            const double rf = slot->circumradius;
            const auto& poly = slot->poly;

            auto base_pts = lift(poly, cap_z);
            auto c2 = centroid2(poly);

            if (!want_cut) {
                double h = rng.next_uniform(0.3, 1.0) * (2.0 * rf);
                double dz = s * h;
                auto cap_pts = lift(poly, cap_z + dz);

                specs[parent_spec].loops.push_back(s > 0 ? reversed_loop(base_pts) : base_pts);

                for (std::size_t i = 0; i < base_pts.size(); ++i)
                    add_wall(base_pts[i], base_pts[(i + 1) % base_pts.size()], dz, false,
                             type_extrude_side, step);

                FaceSpec capface;
                capface.normal = {0, 0, s};
                capface.origin = cap_pts[0];
                capface.loops = {s > 0 ? cap_pts : reversed_loop(cap_pts)};
                capface.labels = FaceLabels{type_extrude_end, step};
                std::size_t cap_idx = specs.size();
                specs.push_back(std::move(capface));

                caps[ci].hole_disks.push_back({q[0], q[1], rf});
                caps.push_back({cap_idx, cap_z + dz, static_cast<int>(s), poly, c2,
                                clearance2(poly, c2), {}, 0.45 * h, true});
                out.recipe.push_back({step, false, base_pts, {0, 0, s}, h});
            } else {
                double depth = rng.next_uniform(0.3, 0.8) * budget;
                double dz = -s * depth;
                auto bottom_pts = lift(poly, cap_z + dz);

                specs[parent_spec].loops.push_back(s > 0 ? reversed_loop(base_pts) : base_pts);

                for (std::size_t i = 0; i < base_pts.size(); ++i)
                    add_wall(base_pts[i], base_pts[(i + 1) % base_pts.size()], dz, true,
                             type_cut_side, step);

                FaceSpec bottomface;
                bottomface.normal = {0, 0, s};
                bottomface.origin = bottom_pts[0];
                bottomface.loops = {s > 0 ? bottom_pts : reversed_loop(bottom_pts)};
                bottomface.labels = FaceLabels{type_cut_end, step};
                std::size_t bottom_idx = specs.size();
                specs.push_back(std::move(bottomface));

                caps[ci].hole_disks.push_back({q[0], q[1], rf});
                caps.push_back({bottom_idx, cap_z + dz, static_cast<int>(s), poly, c2,
                                clearance2(poly, c2), {}, budget - depth, false});
                out.recipe.push_back({step, true, base_pts, {0, 0, -s}, depth});
            }
            placed = true;
        }
        if (!placed)
            throw GenerationRetryExceeded("placement failed after 100 attempts at step " +
                                          std::to_string(step));
    }

    std::string model_name = name.empty() ? ("gen-" + std::to_string(seed)) : name;
    out.brep = assemble_planar_solid(specs, model_name, extrude_vocabulary());

    ValidationReport rep = validate_topology(out.brep);
    if (!rep.ok())
        throw TopologyError("generator produced an invalid model: " + rep.violations[0].rule);
    return out;
}

inline BRep generate_model(std::uint64_t seed, const GenParams& params,
                           const std::string& name = "") {
    return generate_model_with_recipe(seed, params, name).brep;
}

// ---------------------------------------------------------------------------
// Dataset generation and manifests
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string file;
    int k = 0;
    std::string split;
};

struct Manifest {
    GenParams params;
    std::vector<ManifestEntry> entries;
};

// Largest-remainder split of n into train/val/test at 65/15/20, remainders
// resolved in train, val, test order.
inline std::array<int, 3> split_counts(int n) {
    const double ratios[3] = {0.65, 0.15, 0.20};
    std::array<int, 3> counts{};
    double rem[3];
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double q = ratios[i] * n;
        counts[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(q));
        rem[i] = q - std::floor(q);
        assigned += counts[static_cast<std::size_t>(i)];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[i] > rem[best]) best = i;
        counts[static_cast<std::size_t>(best)]++;
        rem[best] = -1;
        ++assigned;
    }
    return counts;
}

inline std::string gen_params_json(const GenParams& p) {
    return "{\"seed\": " + std::to_string(p.seed) + ", \"n_models\": " + std::to_string(p.n_models) +
           ", \"steps_min\": " + std::to_string(p.steps_min) +
           ", \"steps_max\": " + std::to_string(p.steps_max) + ", \"profile\": " +
           json_str(p.profile == ProfileShape::Rect ? "rect" : "convex_polygon") +
           ", \"allow_cut\": " + (p.allow_cut ? "true" : "false") +
           ", \"ks_cap\": " + std::to_string(p.ks_cap) + "}";
}

inline Manifest generate_dataset(const GenParams& params, const std::string& out_dir) {
    params.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir);

    auto counts = split_counts(params.n_models);
    Manifest man;
    man.params = params;

    for (int i = 0; i < params.n_models; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "model_%06d", i);
        GeneratedModel gm =
            generate_model_with_recipe(substream_seed(params.seed, static_cast<std::uint64_t>(i)),
                                       params, buf);
        std::string file = std::string(buf) + ".brep.json";
        save_brep(gm.brep, (fs::path(out_dir) / file).string());
        std::string split = i < counts[0] ? "train" : (i < counts[0] + counts[1] ? "val" : "test");
        man.entries.push_back({file, static_cast<int>(gm.recipe.size()), split});
    }

    Provenance prov;
    prov.resolved_config = gen_params_json(params);
    std::string out = "{\n  \"format_version\": \"1\",\n";
    out += "  \"provenance\": " + prov.to_json() + ",\n";
    out += "  \"params\": " + gen_params_json(params) + ",\n";
    out += "  \"models\": [\n";
    for (std::size_t i = 0; i < man.entries.size(); ++i) {
        const auto& e = man.entries[i];
        out += "    {\"file\": " + json_str(e.file) + ", \"k\": " + std::to_string(e.k) +
               ", \"split\": " + json_str(e.split) + "}";
        out += (i + 1 < man.entries.size()) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    write_file((fs::path(out_dir) / "manifest.json").string(), out);
    return man;
}

inline Manifest read_manifest(const std::string& path) {
    using json = nlohmann::json;
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw SyntaxError(e.what(), e.byte);
    }
    Manifest man;
    if (doc.contains("params")) {
        const json& p = doc["params"];
        man.params.seed = p.value("seed", std::uint64_t{0});
        man.params.n_models = p.value("n_models", 0);
        man.params.steps_min = p.value("steps_min", 1);
        man.params.steps_max = p.value("steps_max", 1);
        man.params.allow_cut = p.value("allow_cut", true);
        man.params.profile =
            p.value("profile", std::string("convex_polygon")) == std::string("rect")
                ? ProfileShape::Rect
                : ProfileShape::ConvexPolygon;
        man.params.ks_cap = p.value("ks_cap", 16);
    }
    if (!doc.contains("models") || !doc["models"].is_array())
        throw SchemaError("manifest: missing models array");
    for (const auto& m : doc["models"])
        man.entries.push_back({m.at("file").get<std::string>(), m.at("k").get<int>(),
                               m.at("split").get<std::string>()});
    return man;
}

}  // namespace cadops
