// Shared fixtures and independent oracles for the test suites. Everything in
// here stays test-only and must not lean on the implementation paths under
// test (brute-force assignment, naive metric recomputation, etc.).
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cadops/generator.hpp"
#include "cadops/heads.hpp"
#include "cadops/nn.hpp"

namespace testsupport {

inline cadops::BRep make_box(cadops::Vec3 o, double ex, double ey, double ez,
                             const std::string& name = "box") {
    using namespace cadops;
    std::vector<std::array<double, 2>> poly = {
        {o.x, o.y}, {o.x + ex, o.y}, {o.x + ex, o.y + ey}, {o.x, o.y + ey}};
    auto base = gendetail::lift(poly, o.z);
    auto top = gendetail::lift(poly, o.z + ez);

    std::vector<FaceSpec> specs;
    FaceSpec bottom;
    bottom.normal = {0, 0, -1};
    bottom.origin = base[0];
    bottom.loops = {gendetail::reversed_loop(base)};
    bottom.labels = FaceLabels{1, 0};  // extrude_end
    specs.push_back(bottom);

    FaceSpec topf;
    topf.normal = {0, 0, 1};
    topf.origin = top[0];
    topf.loops = {top};
    topf.labels = FaceLabels{1, 0};
    specs.push_back(topf);

    for (std::size_t i = 0; i < 4; ++i) {
        const Vec3& a = base[i];
        const Vec3& b = base[(i + 1) % 4];
        Vec3 d = normalized(b - a);
        FaceSpec w;
        w.normal = {d.y, -d.x, 0};
        w.origin = a;
        w.loops = {{a, b, top[(i + 1) % 4], top[i]}};
        w.labels = FaceLabels{0, 0};  // extrude_side
        specs.push_back(w);
    }
    return assemble_planar_solid(specs, name, extrude_vocabulary());
}

// Box with one wall split into two coplanar halves; used to exercise the
// degenerate-axis fallback (the halves share one vertical edge).
inline cadops::BRep make_split_wall_box() {
    using namespace cadops;
    double ex = 2, ey = 1, ez = 1;
    std::vector<std::array<double, 2>> poly = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {0, 1}};
    auto base = gendetail::lift(poly, 0.0);
    auto top = gendetail::lift(poly, ez);
    (void)ex;
    (void)ey;

    std::vector<FaceSpec> specs;
    FaceSpec bottom;
    bottom.normal = {0, 0, -1};
    bottom.origin = base[0];
    bottom.loops = {gendetail::reversed_loop(base)};
    bottom.labels = FaceLabels{1, 0};
    specs.push_back(bottom);

    FaceSpec topf;
    topf.normal = {0, 0, 1};
    topf.origin = top[0];
    topf.loops = {top};
    topf.labels = FaceLabels{1, 0};
    specs.push_back(topf);

    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3& a = base[i];
        const Vec3& b = base[(i + 1) % poly.size()];
        Vec3 d = normalized(b - a);
        FaceSpec w;
        w.normal = {d.y, -d.x, 0};
        w.origin = a;
        w.loops = {{a, b, top[(i + 1) % poly.size()], top[i]}};
        w.labels = FaceLabels{0, 0};
        specs.push_back(w);
    }
    return assemble_planar_solid(specs, "split_wall_box", extrude_vocabulary());
}

// Brute-force minimum assignment cost over all injective row->column maps,
// rows in order (lexicographic enumeration, first optimum kept).
inline double brute_force_assignment(const cadops::nn::Mat& cost, std::vector<int>* best_map = nullptr) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    std::vector<int> cols(static_cast<std::size_t>(m));
    std::iota(cols.begin(), cols.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(static_cast<std::size_t>(n), -1);
    std::vector<char> used(static_cast<std::size_t>(m), 0);
    std::vector<int> best_pick;

    std::function<void(int, double)> rec = [&](int row, double acc) {
        if (row == n) {
            if (acc < best) {
                best = acc;
                best_pick = pick;
            }
            return;
        }
        for (int c = 0; c < m; ++c) {
            if (used[static_cast<std::size_t>(c)]) continue;
            used[static_cast<std::size_t>(c)] = 1;
            pick[static_cast<std::size_t>(row)] = c;
            rec(row + 1, acc + cost(row, c));
            used[static_cast<std::size_t>(c)] = 0;
        }
    };
    rec(0, 0.0);
    if (best_map) *best_map = best_pick;
    return best;
}

// Exact set IoU of two binary vectors.
inline double set_iou(const std::vector<double>& a, const std::vector<double>& b) {
    int inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool x = a[i] != 0.0, y = b[i] != 0.0;
        inter += (x && y);
        uni += (x || y);
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// Directional central finite difference of `eval` along unit direction v
// inside one parameter matrix.
template <typename F>
inline double directional_fd(cadops::nn::Mat& value, const cadops::nn::Mat& v, double eps, F eval) {
    value += eps * v;
    double up = eval();
    value -= 2.0 * eps * v;
    double down = eval();
    value += eps * v;
    return (up - down) / (2.0 * eps);
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// 2D Hausdorff distance between two segment soups, by dense sampling.
using Seg2 = std::array<std::array<double, 2>, 2>;

inline double point_to_segs(const std::array<double, 2>& p, const std::vector<Seg2>& segs) {
    double best = std::numeric_limits<double>::infinity();
    for (const Seg2& s : segs)
        best = std::min(best, cadops::point_segment_distance_2d(p, s[0], s[1]));
    return best;
}

inline double directed_hausdorff(const std::vector<Seg2>& from, const std::vector<Seg2>& to,
                                 int samples_per_seg = 64) {
    double worst = 0;
    for (const Seg2& s : from) {
        for (int i = 0; i <= samples_per_seg; ++i) {
            double t = static_cast<double>(i) / samples_per_seg;
            std::array<double, 2> p = {s[0][0] + t * (s[1][0] - s[0][0]),
                                       s[0][1] + t * (s[1][1] - s[0][1])};
            worst = std::max(worst, point_to_segs(p, to));
        }
    }
    return worst;
}

inline double hausdorff(const std::vector<Seg2>& a, const std::vector<Seg2>& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

}  // namespace testsupport
