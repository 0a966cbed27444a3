// Acceptance suite: one numbered check per run criterion, each printing a
// single PASS/FAIL line. Run all, or a single one with --only N.

#include <chrono>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <vector>

#include "cadops/generator.hpp"
#include "cadops/heads.hpp"
#include "cadops/metrics.hpp"
#include "cadops/sketch.hpp"
#include "cadops/train.hpp"
#include "support.hpp"

using namespace cadops;
using nn::Mat;

namespace {

struct Failure {
    std::string detail;
};

void require(bool ok, const std::string& detail) {
    if (!ok) throw Failure{detail};
}

// --- shared setups ---------------------------------------------------------

std::vector<BRep> training_models_32() {
    GenParams p;
    p.seed = 7;
    p.n_models = 32;
    p.steps_min = 1;
    p.steps_max = 4;
    std::vector<BRep> out;
    for (int i = 0; i < p.n_models; ++i)
        out.push_back(generate_model(substream_seed(p.seed, static_cast<std::uint64_t>(i)), p,
                                     "train_" + std::to_string(i)));
    return out;
}

std::vector<BRep> heldout_models_200() {
    GenParams p;
    p.seed = 1007;
    p.n_models = 200;
    p.steps_min = 1;
    p.steps_max = 4;
    std::vector<BRep> out;
    for (int i = 0; i < p.n_models; ++i)
        out.push_back(generate_model(substream_seed(p.seed, static_cast<std::uint64_t>(i)), p,
                                     "heldout_" + std::to_string(i)));
    return out;
}

RunConfig overfit_config(std::uint64_t seed, const std::string& agg) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 500;
    cfg.batch_size = 8;
    cfg.aggregation = agg;
    cfg.k_s = 0;  // training-set max
    return cfg;
}

EvalReport eval_on(nn::ModelParams& mp, std::vector<BRep>& models) {
    std::vector<Prediction> preds;
    std::vector<const BRep*> ptrs;
    for (BRep& b : models) {
        preds.push_back(predict(b, mp));
        ptrs.push_back(&b);
    }
    return evaluate_predictions(preds, ptrs, models[0].vocabulary);
}

// --- criteria --------------------------------------------------------------

void criterion_1() {
    SplitMix64 rng(20240101);
    for (int n = 2; n <= 7; ++n) {
        for (int trial = 0; trial < 1000; ++trial) {
            Mat cost(n, n);
            for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = rng.next_double();
            Assignment got = hungarian(cost);
            double oracle = testsupport::brute_force_assignment(cost);
            require(got.total_cost == oracle,
                    "n=" + std::to_string(n) + " trial " + std::to_string(trial) + ": " +
                        std::to_string(got.total_cost) + " != " + std::to_string(oracle));
        }
    }
}

void criterion_2() {
    // exhaustive over nonzero binary pairs for k <= 4
    for (int k = 1; k <= 4; ++k) {
        for (int a = 1; a < (1 << k); ++a) {
            for (int b = 1; b < (1 << k); ++b) {
                std::vector<double> va(static_cast<std::size_t>(k)), vb(static_cast<std::size_t>(k));
                for (int i = 0; i < k; ++i) {
                    va[static_cast<std::size_t>(i)] = (a >> i) & 1;
                    vb[static_cast<std::size_t>(i)] = (b >> i) & 1;
                }
                require(std::abs(riou(va, vb) - testsupport::set_iou(va, vb)) <= 1e-12,
                        "exhaustive k=" + std::to_string(k));
            }
        }
    }
    SplitMix64 rng(2);
    for (int k = 5; k <= 10; ++k) {
        for (int trial = 0; trial < 100000; ++trial) {
            std::vector<double> va(static_cast<std::size_t>(k)), vb(static_cast<std::size_t>(k));
            bool any_a = false, any_b = false;
            for (int i = 0; i < k; ++i) {
                va[static_cast<std::size_t>(i)] = rng.next_below(2) ? 1.0 : 0.0;
                vb[static_cast<std::size_t>(i)] = rng.next_below(2) ? 1.0 : 0.0;
                any_a = any_a || va[static_cast<std::size_t>(i)] != 0;
                any_b = any_b || vb[static_cast<std::size_t>(i)] != 0;
            }
            if (!any_a) va[static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(k)))] = 1.0;
            if (!any_b) vb[static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(k)))] = 1.0;
            require(std::abs(riou(va, vb) - testsupport::set_iou(va, vb)) <= 1e-12,
                    "random k=" + std::to_string(k));
        }
    }
}

double step_loss_of(const Mat& S_present, const Mat& S_pad, const Mat& shat) {
    nn::Tape tape;
    int node = tape.input(shat);
    Assignment asg = align_steps(S_present, shat);
    auto perm = extend_permutation(asg, static_cast<int>(shat.cols()));
    return tape.value(tape.riou_row_loss(tape.permute_cols(node, perm), S_pad))(0, 0);
}

void criterion_3() {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const int nf = 4 + static_cast<int>(rng.next_below(8));
        const int k_gt = 1 + static_cast<int>(rng.next_below(4));
        const int k_s = k_gt + static_cast<int>(rng.next_below(3));
        std::vector<int> gt(static_cast<std::size_t>(nf));
        for (int f = 0; f < nf; ++f)
            gt[static_cast<std::size_t>(f)] = f < k_gt ? f : static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k_gt)));
        Mat shat(nf, k_s);
        for (Eigen::Index i = 0; i < shat.size(); ++i) shat.data()[i] = rng.next_double() + 1e-6;
        for (int r = 0; r < nf; ++r) shat.row(r) /= shat.row(r).sum();

        auto gt_mats = [&](const std::vector<int>& labels) {
            Mat present = Mat::Zero(nf, k_gt);
            Mat pad = Mat::Zero(nf, k_s);
            for (int f = 0; f < nf; ++f) {
                present(f, labels[static_cast<std::size_t>(f)]) = 1.0;
                pad(f, labels[static_cast<std::size_t>(f)]) = 1.0;
            }
            return std::make_pair(present, pad);
        };
        auto [S0, P0] = gt_mats(gt);
        double base = step_loss_of(S0, P0, shat);

        std::vector<int> relab(static_cast<std::size_t>(k_gt));
        std::iota(relab.begin(), relab.end(), 0);
        for (int i = k_gt - 1; i > 0; --i)
            std::swap(relab[static_cast<std::size_t>(i)],
                      relab[static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(i + 1)))]);
        std::vector<int> gt2(static_cast<std::size_t>(nf));
        for (int f = 0; f < nf; ++f)
            gt2[static_cast<std::size_t>(f)] = relab[static_cast<std::size_t>(gt[static_cast<std::size_t>(f)])];
        auto [S1, P1] = gt_mats(gt2);
        require(std::abs(step_loss_of(S1, P1, shat) - base) <= 1e-12, "ground-truth relabeling");

        std::vector<int> cperm(static_cast<std::size_t>(k_s));
        std::iota(cperm.begin(), cperm.end(), 0);
        for (int i = k_s - 1; i > 0; --i)
            std::swap(cperm[static_cast<std::size_t>(i)],
                      cperm[static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(i + 1)))]);
        Mat shat2(nf, k_s);
        for (int j = 0; j < k_s; ++j) shat2.col(j) = shat.col(cperm[static_cast<std::size_t>(j)]);
        require(std::abs(step_loss_of(S0, P0, shat2) - base) <= 1e-12, "prediction column permutation");
    }
}

void criterion_4() {
    GenParams gp;
    gp.seed = 404;
    gp.steps_min = 2;
    gp.steps_max = 3;
    SplitMix64 rng(44);
    double worst = 0;
    std::string worst_at = "-";
    for (int m = 0; m < 25; ++m) {
        BRep b = generate_model(substream_seed(gp.seed, static_cast<std::uint64_t>(m)), gp);
        FeatureMatrices fm = featurize(b, 5);
        TopologyIndices topo = build_topology_indices(b);
        nn::ModelParams mp;
        mp.arch = {64, 2, 64, 5, 4, 3, "avg", extrude_vocabulary().names};
        add_backbone_params(mp, fm.d_f(), fm.d_e(), fm.d_c(), {64, 2, 64});
        add_head_params(mp, 64, 3, 4, AggMode::Avg);
        nn::init_uniform(mp, 500 + static_cast<std::uint64_t>(m));
        GroundTruth gt = make_ground_truth(b, 3, 4);

        nn::SelectionCache cache;
        auto eval = [&](nn::Tape& tape) {
            ForwardNodes f = forward_pipeline(tape, fm, topo, mp);
            return attach_losses(tape, f.shat, f.that, gt).total;
        };
        {
            nn::Tape tape(&cache);
            tape.backward(eval(tape));
        }
        for (nn::Param& p : mp.params) {
            Mat v(p.value.rows(), p.value.cols());
            for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.next_uniform(-1, 1);
            v /= v.norm();
            double analytic = (p.grad.cwiseProduct(v)).sum();
            cache.rewind();
            p.value += 1e-6 * v;
            nn::Tape tu(&cache);
            double up = tu.value(eval(tu))(0, 0);
            cache.rewind();
            p.value -= 2e-6 * v;
            nn::Tape td(&cache);
            double down = td.value(eval(td))(0, 0);
            p.value += 1e-6 * v;
            double fd = (up - down) / 2e-6;
            double err = testsupport::rel_err(analytic, fd);
            if (err > worst) {
                worst = err;
                worst_at = "model " + std::to_string(m) + " " + p.name;
            }
        }
    }
    std::cout << "    max relative gradient error " << worst << " at " << worst_at << "\n";
    require(worst <= 1e-4, "max rel err " + std::to_string(worst) + " at " + worst_at);
}

void criterion_5() {
    std::vector<BRep> train = training_models_32();
    TrainResult res = train_run(train, overfit_config(7, "avg"));
    std::vector<BRep> again = training_models_32();
    EvalReport rep = eval_on(res.params, again);
    double final_total = res.log.back().total;
    std::cout << "    train type mAcc " << percent1(rep.type_macc) << ", step mAcc "
              << percent1(rep.step_macc) << ", final L_total " << final_total << "\n";
    require(rep.type_macc >= 0.95, "type mAcc " + percent1(rep.type_macc) + " < 95");
    require(rep.step_macc >= 0.90, "step mAcc " + percent1(rep.step_macc) + " < 90");
    require(final_total <= 0.10, "final L_total " + std::to_string(final_total) + " > 0.10");
}

void criterion_6() {
    std::vector<BRep> train = training_models_32();
    TrainResult res = train_run(train, overfit_config(7, "avg"));
    std::vector<BRep> held = heldout_models_200();
    EvalReport rep = eval_on(res.params, held);
    std::cout << "    held-out type mAcc " << percent1(rep.type_macc) << ", step mAcc "
              << percent1(rep.step_macc) << "\n";
    require(rep.type_macc >= 0.85, "type mAcc " + percent1(rep.type_macc) + " < 85");
    require(rep.step_macc >= 0.70, "step mAcc " + percent1(rep.step_macc) + " < 70");
}

void criterion_7() {
    std::vector<BRep> held = heldout_models_200();
    double rc_avg = 0, rc_none = 0;
    for (std::uint64_t seed : {7ULL, 8ULL, 9ULL}) {
        for (const char* agg : {"avg", "none"}) {
            std::vector<BRep> train = training_models_32();
            TrainResult res = train_run(train, overfit_config(seed, agg));
            EvalReport rep = eval_on(res.params, held);
            std::cout << "    seed " << seed << " agg " << agg << ": R_C "
                      << percent1(rep.r_c) << "\n";
            (std::strcmp(agg, "avg") == 0 ? rc_avg : rc_none) += rep.r_c / 3.0;
        }
    }
    std::cout << "    mean R_C: avg " << percent1(rc_avg) << " vs none " << percent1(rc_none)
              << "\n";
    require(rc_avg >= rc_none, "R_C(avg) " + percent1(rc_avg) + " < R_C(none) " + percent1(rc_none));
}

void criterion_8() {
    GenParams p;
    p.steps_min = p.steps_max = 1;
    p.profile = ProfileShape::Rect;
    BRep b = generate_model(7, p);
    require(b.n_faces() == 6, "face count " + std::to_string(b.n_faces()));
    int sides = 0, ends = 0;
    for (const Face& f : b.faces) {
        require(f.labels.has_value() && f.labels->op_step == 0, "op_step != 0");
        const std::string& t = b.vocabulary.names[static_cast<std::size_t>(f.labels->op_type)];
        sides += t == "extrude_side";
        ends += t == "extrude_end";
    }
    require(ends == 2, "extrude_end count " + std::to_string(ends));
    require(sides == 4, "extrude_side count " + std::to_string(sides));
}

void criterion_9() {
    // ground truth as prediction over a small dataset
    GenParams p;
    p.seed = 909;
    p.n_models = 10;
    p.steps_max = 4;
    std::vector<Prediction> preds;
    std::vector<BRep> models;
    std::vector<const BRep*> ptrs;
    for (int i = 0; i < p.n_models; ++i)
        models.push_back(generate_model(substream_seed(p.seed, static_cast<std::uint64_t>(i)), p));
    for (BRep& b : models) {
        preds.push_back(prediction_from_labels(b, dense_steps(b).n_steps, b.vocabulary.size()));
        ptrs.push_back(&b);
    }
    EvalReport rep = evaluate_predictions(preds, ptrs, models[0].vocabulary);
    require(percent1(rep.r_c) == "100.0", "oracle R_C " + percent1(rep.r_c));
    require(percent1(rep.ms_c) == "100.0", "oracle mS_C " + percent1(rep.ms_c));

    // the hand-built two-step case: {extrude, extrude} and {extrude, fillet}
    TypeVocabulary vocab = full_vocabulary();
    ConsistencyCounts cc = consistency({0, 0, 1, 1}, {0, 1, 0, 8}, vocab);
    double r_c = static_cast<double>(cc.consistent_steps) / cc.predicted_steps;
    require(r_c == 0.5, "hand case R_C " + std::to_string(r_c));
    require(cc.s_c == 0.75, "hand case S_C " + std::to_string(cc.s_c));
    require(percent1(r_c) == "50.0" && percent1(cc.s_c) == "75.0", "formatting");
}

void criterion_10() {
    GenParams gp;
    gp.seed = 1010;
    gp.steps_min = 1;
    gp.steps_max = 4;
    int checked_groups = 0;
    for (int m = 0; m < 50; ++m) {
        GeneratedModel gm =
            generate_model_with_recipe(substream_seed(gp.seed, static_cast<std::uint64_t>(m)), gp);
        const BRep& b = gm.brep;
        DenseSteps ds = dense_steps(b);
        Prediction pred = prediction_from_labels(b, ds.n_steps, b.vocabulary.size());
        NormalizedModel nm = normalize_model(b);
        std::vector<Sketch> sketches = recover_sketches(b, pred, {});
        for (const Sketch& sk : sketches) {
            require(sk.status == "ok", "model " + std::to_string(m) + " step " +
                                           std::to_string(sk.step_id) + " status " + sk.status);
            const StepRecipe& r = gm.recipe.at(static_cast<std::size_t>(sk.step_id));
            require(!r.is_cut, "cut step grouped without --include-cuts");

            double cosang = std::abs(dot(sk.axis, r.axis));
            double angular = std::acos(std::min(1.0, cosang));
            require(angular <= 1e-6,
                    "axis error " + std::to_string(angular) + " on model " + std::to_string(m));

            std::vector<testsupport::Seg2> got;
            for (const auto& chain : sk.chains)
                for (std::size_t i = 0; i + 1 < chain.size(); ++i)
                    got.push_back({chain[i], chain[i + 1]});
            std::vector<testsupport::Seg2> want;
            const std::size_t n = r.footprint.size();
            for (std::size_t i = 0; i < n; ++i) {
                Vec3 a = (r.footprint[i] - nm.center) / nm.scale;
                Vec3 c = (r.footprint[(i + 1) % n] - nm.center) / nm.scale;
                want.push_back({project_to_plane(a, sk.origin, sk.basis_u, sk.basis_v),
                                project_to_plane(c, sk.origin, sk.basis_u, sk.basis_v)});
            }
            double h = testsupport::hausdorff(got, want);
            require(h <= 1e-6, "hausdorff " + std::to_string(h) + " on model " + std::to_string(m) +
                                   " step " + std::to_string(sk.step_id));
            ++checked_groups;
        }
    }
    std::cout << "    " << checked_groups << " sketch groups matched their generating profiles\n";
    require(checked_groups > 50, "too few groups exercised");

    // constructed parallel-wall cases: fallback via the shared edge, and a
    // reported degenerate group when no shared edge exists
    {
        BRep b = testsupport::make_split_wall_box();
        Prediction pred;
        pred.model = b.name;
        pred.type_labels.assign(static_cast<std::size_t>(b.n_faces()), 1);
        pred.step_labels.assign(static_cast<std::size_t>(b.n_faces()), 0);
        int walls = 0;
        for (const Face& f : b.faces)
            if (f.surface.axis.y < -0.5 && walls < 2) {
                pred.type_labels[static_cast<std::size_t>(f.id)] = 0;
                ++walls;
            }
        require(walls == 2, "construction broke");
        auto sketches = recover_sketches(b, pred, {});
        require(sketches.size() == 1 && sketches[0].status == "axis_fallback",
                "fallback not triggered");
        require(std::abs(std::abs(sketches[0].axis.z) - 1.0) < 1e-9, "fallback axis wrong");
        std::cout << "    parallel-wall case reported status '" << sketches[0].status << "'\n";
    }
    {
        BRep box = testsupport::make_box({0, 0, 0}, 2, 1, 1);
        Prediction p2;
        p2.model = box.name;
        p2.type_labels.assign(6, 1);
        p2.step_labels.assign(6, 0);
        for (const Face& f : box.faces)
            if (std::abs(f.surface.axis.y) > 0.5) p2.type_labels[static_cast<std::size_t>(f.id)] = 0;
        auto sk2 = recover_sketches(box, p2, {});
        require(sk2.size() == 1 && sk2[0].status == "degenerate", "degenerate not reported");
    }
}

void criterion_11() {
    GenParams p;
    p.seed = 1111;
    p.steps_min = 1;
    p.steps_max = 5;
    for (int m = 0; m < 500; ++m) {
        BRep b = generate_model(substream_seed(p.seed, static_cast<std::uint64_t>(m)), p);
        std::string doc = serialize_brep(b);
        require(doc == serialize_brep(b), "serialization not byte-stable");
        BRep parsed = parse_brep(doc);
        require(structural_equal(b, parsed), "round trip changed model " + std::to_string(m));
        require(validate_topology(parsed).ok(), "validation failed on model " + std::to_string(m));
        require(serialize_brep(parsed) == doc, "second serialization differs");
    }
}

struct Criterion {
    int id;
    const char* name;
    std::function<void()> fn;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);

    std::vector<Criterion> criteria = {
        {1, "assignment equals brute force on 6000 random matrices", criterion_1},
        {2, "relaxed IoU equals set IoU on binary vectors", criterion_2},
        {3, "step loss invariant under label and column permutations", criterion_3},
        {4, "total-loss gradients match finite differences", criterion_4},
        {5, "32-model overfit reaches the accuracy and loss floors", criterion_5},
        {6, "held-out accuracy clears the generalization floors", criterion_6},
        {7, "avg aggregation is at least as consistent as none", criterion_7},
        {8, "single extrusion labels two ends and four sides", criterion_8},
        {9, "consistency metrics on oracle and hand-built cases", criterion_9},
        {10, "sketches match generating profiles; fallbacks reported", criterion_10},
        {11, "parse/serialize round trip on 500 models", criterion_11},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (only && c.id != only) continue;
        auto start = std::chrono::steady_clock::now();
        try {
            c.fn();
            double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::printf("[PASS] criterion %2d: %s (%.1fs)\n", c.id, c.name, s);
        } catch (const Failure& f) {
            double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::printf("[FAIL] criterion %2d: %s (%.1fs)\n       %s\n", c.id, c.name, s,
                        f.detail.c_str());
            ++failures;
        } catch (const std::exception& e) {
            std::printf("[FAIL] criterion %2d: %s\n       unexpected error: %s\n", c.id, c.name,
                        e.what());
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
