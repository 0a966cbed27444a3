#include <catch2/catch_amalgamated.hpp>

#include "cadops/generator.hpp"
#include "cadops/sketch.hpp"
#include "support.hpp"

using namespace cadops;
using testsupport::make_box;
using testsupport::Seg2;

namespace {

std::vector<Seg2> sketch_segments(const Sketch& sk) {
    std::vector<Seg2> out;
    for (const auto& chain : sk.chains)
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) out.push_back({chain[i], chain[i + 1]});
    return out;
}

// The generating profile polygon expressed in the sketch's own plane basis,
// after applying the model normalization transform.
std::vector<Seg2> profile_segments(const StepRecipe& step, const NormalizedModel& nm,
                                   const Sketch& sk) {
    std::vector<Seg2> out;
    const std::size_t n = step.footprint.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 a = (step.footprint[i] - nm.center) / nm.scale;
        Vec3 b = (step.footprint[(i + 1) % n] - nm.center) / nm.scale;
        out.push_back({project_to_plane(a, sk.origin, sk.basis_u, sk.basis_v),
                       project_to_plane(b, sk.origin, sk.basis_u, sk.basis_v)});
    }
    return out;
}

}  // namespace

TEST_CASE("extrusion axis from wall normals") {
    CHECK(norm(extrusion_axis({{1, 0, 0}, {0, 1, 0}}) - Vec3{0, 0, 1}) < 1e-15);

    SECTION("box sides with sign cancellation") {
        Vec3 axis = extrusion_axis({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}});
        CHECK(std::abs(norm(axis) - 1.0) < 1e-9);
        CHECK(std::abs(std::abs(axis.z) - 1.0) < 1e-12);
    }
    SECTION("parallel normals are degenerate") {
        CHECK_THROWS_AS(extrusion_axis({{1, 0, 0}, {-1, 0, 0}}), DegenerateAxis);
        CHECK_THROWS_AS(extrusion_axis({{1, 0, 0}}), DegenerateAxis);
    }
    SECTION("flipping all normals keeps the axis up to sign") {
        std::vector<Vec3> base = {{1, 0, 0}, {0, 1, 0}, {-0.7071067811865476, 0.7071067811865475, 0}};
        Vec3 a = extrusion_axis(base);
        std::vector<Vec3> flipped;
        for (const Vec3& n : base) flipped.push_back(n * -1.0);
        Vec3 b = extrusion_axis(flipped);
        CHECK(std::min(norm(a - b), norm(a + b)) < 1e-12);
    }
}

TEST_CASE("projection origin") {
    BRep box = normalize_model(make_box({0, 0, 0}, 2, 2, 2)).brep;
    SECTION("box sides center on the origin") {
        Vec3 o = projection_origin(box, {2, 3, 4, 5}, 5);
        CHECK(norm(o) < 1e-12);
    }
    SECTION("single planar face centroid is exact") {
        Vec3 o = projection_origin(box, {1}, 5);  // top face of the normalized cube
        CHECK(std::abs(o.z - 1.0) < 1e-12);
        CHECK(std::abs(o.x) < 1e-12);
        CHECK(std::abs(o.y) < 1e-12);
    }
    SECTION("asymmetric prism centroid matches the analytic value") {
        BRep prism = normalize_model(make_box({0, 0, 0}, 4, 2, 2)).brep;
        // walls only; by symmetry the area-weighted centroid is the center
        Vec3 o = projection_origin(prism, {2, 3, 4, 5}, 7);
        CHECK(norm(o) < 1e-6);
        // one wall alone: centroid sits at that wall's center
        Vec3 w = projection_origin(prism, {2}, 5);
        CHECK(std::abs(w.y + 0.5) < 1e-6);
    }
}

TEST_CASE("sketch recovery on a perfectly predicted box") {
    GenParams gp;
    gp.steps_min = gp.steps_max = 1;
    gp.profile = ProfileShape::Rect;
    GeneratedModel gm = generate_model_with_recipe(88, gp);
    const BRep& b = gm.brep;
    DenseSteps ds = dense_steps(b);
    Prediction pred = prediction_from_labels(b, ds.n_steps, b.vocabulary.size());

    std::vector<Sketch> sketches = recover_sketches(b, pred, {});
    REQUIRE(sketches.size() == 1);
    const Sketch& sk = sketches[0];
    CHECK(sk.status == "ok");
    CHECK(sk.source_faces.size() == 4);
    CHECK(std::abs(std::abs(sk.axis.z) - 1.0) < 1e-12);

    NormalizedModel nm = normalize_model(b);
    double h = testsupport::hausdorff(sketch_segments(sk), profile_segments(gm.recipe[0], nm, sk));
    CHECK(h < 1e-9);
}

TEST_CASE("merging two steps deviates from both profiles") {
    GenParams gp;
    gp.steps_min = gp.steps_max = 2;
    gp.allow_cut = false;
    GeneratedModel gm = generate_model_with_recipe(31, gp);
    const BRep& b = gm.brep;
    DenseSteps ds = dense_steps(b);
    Prediction good = prediction_from_labels(b, ds.n_steps, b.vocabulary.size());
    Prediction merged = good;
    for (int& s : merged.step_labels) s = 0;  // everything predicted as one step

    std::vector<Sketch> sk_good = recover_sketches(b, good, {});
    std::vector<Sketch> sk_merged = recover_sketches(b, merged, {});
    REQUIRE(sk_good.size() == 2);
    REQUIRE(sk_merged.size() == 1);

    NormalizedModel nm = normalize_model(b);
    for (const Sketch& g : sk_good) {
        const StepRecipe& r = gm.recipe[static_cast<std::size_t>(g.step_id)];
        double clean = testsupport::hausdorff(sketch_segments(g), profile_segments(r, nm, g));
        CHECK(clean < 1e-9);
        double merged_h = testsupport::hausdorff(sketch_segments(sk_merged[0]),
                                                 profile_segments(r, nm, sk_merged[0]));
        CHECK(merged_h > 1e-3);
    }
}

TEST_CASE("degenerate axis fallback uses the shared straight edge") {
    BRep b = testsupport::make_split_wall_box();
    // predict only the two coplanar wall halves as extrude_side of step 0
    Prediction pred;
    pred.model = b.name;
    pred.type_labels.assign(static_cast<std::size_t>(b.n_faces()), 1);  // extrude_end
    pred.step_labels.assign(static_cast<std::size_t>(b.n_faces()), 0);
    int walls = 0;
    for (const Face& f : b.faces) {
        if (f.surface.axis.y < -0.5 && walls < 2) {  // the split front wall halves
            pred.type_labels[static_cast<std::size_t>(f.id)] = 0;
            ++walls;
        }
    }
    REQUIRE(walls == 2);
    pred.step_probs = nn::Mat::Zero(b.n_faces(), 1);
    pred.type_probs = nn::Mat::Zero(b.n_faces(), 4);

    std::vector<Sketch> sketches = recover_sketches(b, pred, {});
    REQUIRE(sketches.size() == 1);
    CHECK(sketches[0].status == "axis_fallback");
    CHECK(std::abs(std::abs(sketches[0].axis.z) - 1.0) < 1e-12);

    SECTION("opposite walls with no shared edge stay degenerate") {
        BRep box = make_box({0, 0, 0}, 2, 1, 1);
        Prediction p2;
        p2.model = box.name;
        p2.type_labels.assign(6, 1);
        p2.step_labels.assign(6, 0);
        // two opposite walls: normals -y and +y
        for (const Face& f : box.faces)
            if (std::abs(f.surface.axis.y) > 0.5)
                p2.type_labels[static_cast<std::size_t>(f.id)] = 0;
        p2.step_probs = nn::Mat::Zero(6, 1);
        p2.type_probs = nn::Mat::Zero(6, 4);
        std::vector<Sketch> sk2 = recover_sketches(box, p2, {});
        REQUIRE(sk2.size() == 1);
        CHECK(sk2[0].status == "degenerate");
        CHECK(sk2[0].chains.empty());
        CHECK_THROWS_AS(export_svg(sk2[0]), EmptySketch);
    }
}

TEST_CASE("projection is invariant to a global normal flip up to reflection") {
    GenParams gp;
    gp.steps_min = gp.steps_max = 1;
    BRep b = generate_model(17, gp);
    DenseSteps ds = dense_steps(b);
    Prediction pred = prediction_from_labels(b, ds.n_steps, b.vocabulary.size());
    std::vector<Sketch> sk = recover_sketches(b, pred, {});
    REQUIRE(sk.size() == 1);

    // recompute with the axis flipped by hand: u' = plane_basis(-a)
    Sketch flipped = sk[0];
    flipped.axis = sk[0].axis * -1.0;
    auto basis = plane_basis(flipped.axis);
    flipped.basis_u = basis[0];
    flipped.basis_v = basis[1];
    // distances between projected point sets are preserved under the
    // orthogonal change of basis, so the profile matches up to reflection
    BRep nb = normalize_model(b).brep;
    const Face& wall = nb.faces[static_cast<std::size_t>(sk[0].source_faces[0])];
    const CurveGeom& c =
        nb.edges[static_cast<std::size_t>(nb.coedges[static_cast<std::size_t>(wall.loops[0][0])].edge)].curve;
    auto p1 = project_to_plane(c.start, sk[0].origin, sk[0].basis_u, sk[0].basis_v);
    auto q1 = project_to_plane(c.end, sk[0].origin, sk[0].basis_u, sk[0].basis_v);
    auto p2 = project_to_plane(c.start, flipped.origin, flipped.basis_u, flipped.basis_v);
    auto q2 = project_to_plane(c.end, flipped.origin, flipped.basis_u, flipped.basis_v);
    double d1 = std::hypot(p1[0] - q1[0], p1[1] - q1[1]);
    double d2 = std::hypot(p2[0] - q2[0], p2[1] - q2[1]);
    CHECK(d1 == Catch::Approx(d2).margin(1e-12));
}

TEST_CASE("svg export") {
    Sketch sk;
    sk.step_id = 0;
    sk.chains = {{{-1, -1}, {1, -1}}, {{1, -1}, {1, 1}}, {{1, 1}, {-1, 1}}, {{-1, 1}, {-1, -1}}};
    std::string svg = export_svg(sk);
    CHECK(svg.find("viewBox=\"-1.05 -1.05 2.1 2.1\"") != std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '\n') >= 6);
    std::size_t paths = 0;
    for (std::size_t at = svg.find("<path"); at != std::string::npos; at = svg.find("<path", at + 1))
        ++paths;
    CHECK(paths == 4);
    CHECK(export_svg(sk) == svg);
}
