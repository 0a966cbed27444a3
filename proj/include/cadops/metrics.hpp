#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cadops/generator.hpp"
#include "cadops/heads.hpp"

namespace cadops {

// ---------------------------------------------------------------------------
// Op-type metrics
// ---------------------------------------------------------------------------

struct TypeMetrics {
    double macc = 0;             // mean over models of per-model face accuracy
    double miou = 0;             // mean over classes present in GT or predictions
    double face_acc_pooled = 0;  // dataset-level face accuracy
    std::map<std::string, double> per_class_iou;
    std::vector<double> per_model_acc;
};

struct LabeledModel {
    std::vector<int> pred;
    std::vector<int> gt;
};

inline TypeMetrics type_metrics(const std::vector<LabeledModel>& models,
                                const TypeVocabulary& vocab) {
    TypeMetrics out;
    const int k = vocab.size();
    std::vector<long> tp(static_cast<std::size_t>(k), 0), fp(static_cast<std::size_t>(k), 0),
        fn(static_cast<std::size_t>(k), 0);
    long correct = 0, total = 0;
    for (const LabeledModel& m : models) {
        if (m.pred.size() != m.gt.size()) throw ShapeError("type_metrics: label count mismatch");
        long c = 0;
        for (std::size_t f = 0; f < m.pred.size(); ++f) {
            int p = m.pred[f], g = m.gt[f];
            if (p < 0 || p >= k || g < 0 || g >= k)
                throw VocabularyMismatch("label outside vocabulary");
            if (p == g) {
                ++c;
                ++tp[static_cast<std::size_t>(p)];
            } else {
                ++fp[static_cast<std::size_t>(p)];
                ++fn[static_cast<std::size_t>(g)];
            }
        }
        correct += c;
        total += static_cast<long>(m.pred.size());
        out.per_model_acc.push_back(static_cast<double>(c) / static_cast<double>(m.pred.size()));
    }
    double acc_sum = 0;
    for (double a : out.per_model_acc) acc_sum += a;
    out.macc = out.per_model_acc.empty() ? 0 : acc_sum / static_cast<double>(out.per_model_acc.size());
    out.face_acc_pooled = total ? static_cast<double>(correct) / static_cast<double>(total) : 0;

    double iou_sum = 0;
    int present = 0;
    for (int c = 0; c < k; ++c) {
        long denom = tp[static_cast<std::size_t>(c)] + fp[static_cast<std::size_t>(c)] +
                     fn[static_cast<std::size_t>(c)];
        if (denom == 0) continue;  // class absent from GT and predictions
        double iou = static_cast<double>(tp[static_cast<std::size_t>(c)]) /
                     static_cast<double>(denom);
        out.per_class_iou[vocab.names[static_cast<std::size_t>(c)]] = iou;
        iou_sum += iou;
        ++present;
    }
    out.miou = present ? iou_sum / present : 0;
    return out;
}

// ---------------------------------------------------------------------------
// Op-step accuracy
// ---------------------------------------------------------------------------

// Per-model accuracy after aligning predicted step labels to ground truth on
// hard memberships; step ids are arbitrary so only the grouping matters.
inline double step_accuracy_single(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size() || pred.empty()) throw ShapeError("step accuracy: bad labels");
    const int nf = static_cast<int>(pred.size());

    std::vector<int> gt_dense = gt;
    {
        std::map<int, int> remap;
        for (int g : gt) remap.emplace(g, 0);
        int next = 0;
        for (auto& [k, v] : remap) v = next++;
        for (int& g : gt_dense) g = remap.at(g);
    }
    int k_gt = 0;
    for (int g : gt_dense) k_gt = std::max(k_gt, g + 1);
    int k_pred = 0;
    for (int p : pred) k_pred = std::max(k_pred, p + 1);
    const int m = std::max(k_gt, k_pred);

    nn::Mat S = nn::Mat::Zero(nf, k_gt);
    nn::Mat P = nn::Mat::Zero(nf, m);
    for (int f = 0; f < nf; ++f) {
        S(f, gt_dense[static_cast<std::size_t>(f)]) = 1.0;
        P(f, pred[static_cast<std::size_t>(f)]) = 1.0;
    }
    Assignment asg = align_steps(S, P);
    long correct = 0;
    for (int f = 0; f < nf; ++f)
        if (asg.col_of_row[static_cast<std::size_t>(gt_dense[static_cast<std::size_t>(f)])] ==
            pred[static_cast<std::size_t>(f)])
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(nf);
}

inline double step_macc(const std::vector<LabeledModel>& models) {
    if (models.empty()) return 0;
    double sum = 0;
    for (const LabeledModel& m : models) sum += step_accuracy_single(m.pred, m.gt);
    return sum / static_cast<double>(models.size());
}

// ---------------------------------------------------------------------------
// Consistency between predicted steps and (grouped) predicted types
// ---------------------------------------------------------------------------

inline std::vector<std::string> group_types(const std::vector<int>& labels,
                                            const TypeVocabulary& vocab) {
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (int l : labels) out.push_back(vocab.group_of(l));
    return out;
}

struct ConsistencyCounts {
    int consistent_steps = 0;
    int predicted_steps = 0;
    double s_c = 1.0;  // mean over predicted steps of the majority-type fraction
};

inline ConsistencyCounts consistency(const std::vector<int>& pred_steps,
                                     const std::vector<int>& pred_types,
                                     const TypeVocabulary& vocab) {
    if (pred_steps.size() != pred_types.size()) throw ShapeError("consistency: label mismatch");
    std::vector<std::string> grouped = group_types(pred_types, vocab);
    std::map<int, std::map<std::string, int>> by_step;
    for (std::size_t f = 0; f < pred_steps.size(); ++f) by_step[pred_steps[f]][grouped[f]]++;

    ConsistencyCounts out;
    out.predicted_steps = static_cast<int>(by_step.size());
    double frac_sum = 0;
    for (const auto& [step, counts] : by_step) {
        int n = 0, best = 0;
        for (const auto& [g, c] : counts) {
            n += c;
            best = std::max(best, c);
        }
        if (counts.size() == 1) ++out.consistent_steps;
        frac_sum += static_cast<double>(best) / static_cast<double>(n);
    }
    out.s_c = out.predicted_steps ? frac_sum / out.predicted_steps : 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Dataset evaluation
// ---------------------------------------------------------------------------

struct PerModelRow {
    std::string model;
    int faces = 0;
    int k_gt = 0;
    double type_acc = 0;
    double step_acc = 0;
    int consistent_steps = 0;
    int predicted_steps = 0;
    double s_c = 1.0;
};

struct EvalReport {
    double type_macc = 0;
    double type_miou = 0;
    double face_acc_pooled = 0;
    double step_macc = 0;
    double r_c = 0;
    double ms_c = 0;
    std::map<std::string, double> per_class_iou;
    std::vector<PerModelRow> per_model;
    int n_models = 0;
    int n_faces = 0;
};

inline EvalReport evaluate_predictions(const std::vector<Prediction>& preds,
                                       const std::vector<const BRep*>& models,
                                       const TypeVocabulary& vocab) {
    if (preds.size() != models.size()) throw ShapeError("evaluate: count mismatch");
    EvalReport rep;
    std::vector<LabeledModel> type_pairs, step_pairs;
    long consistent = 0, steps = 0;
    double sc_sum = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const BRep& b = *models[i];
        const Prediction& p = preds[i];
        if (static_cast<int>(p.type_labels.size()) != b.n_faces())
            throw ShapeError("prediction for '" + b.name + "' does not match face count");
        DenseSteps ds = dense_steps(b);
        LabeledModel tm, sm;
        tm.pred = p.type_labels;
        sm.pred = p.step_labels;
        sm.gt = ds.face_step;
        for (const Face& f : b.faces) tm.gt.push_back(f.labels->op_type);
        type_pairs.push_back(tm);
        step_pairs.push_back(sm);

        ConsistencyCounts cc = consistency(p.step_labels, p.type_labels, vocab);
        consistent += cc.consistent_steps;
        steps += cc.predicted_steps;
        sc_sum += cc.s_c;

        PerModelRow row;
        row.model = b.name;
        row.faces = b.n_faces();
        row.k_gt = ds.n_steps;
        row.type_acc = type_metrics({tm}, vocab).face_acc_pooled;
        row.step_acc = step_accuracy_single(sm.pred, sm.gt);
        row.consistent_steps = cc.consistent_steps;
        row.predicted_steps = cc.predicted_steps;
        row.s_c = cc.s_c;
        rep.per_model.push_back(row);
        rep.n_faces += b.n_faces();
    }
    TypeMetrics tms = type_metrics(type_pairs, vocab);
    rep.type_macc = tms.macc;
    rep.type_miou = tms.miou;
    rep.face_acc_pooled = tms.face_acc_pooled;
    rep.per_class_iou = tms.per_class_iou;
    rep.step_macc = step_macc(step_pairs);
    rep.r_c = steps ? static_cast<double>(consistent) / static_cast<double>(steps) : 0;
    rep.ms_c = preds.empty() ? 0 : sc_sum / static_cast<double>(preds.size());
    rep.n_models = static_cast<int>(preds.size());
    return rep;
}

inline std::string percent1(double frac) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * frac);
    return buf;
}

inline std::string report_json(const EvalReport& r, const Provenance& prov) {
    std::string out = "{\n";
    out += "  \"format_version\": \"1\",\n";
    out += "  \"provenance\": " + prov.to_json() + ",\n";
    out += "  \"counts\": {\"models\": " + std::to_string(r.n_models) +
           ", \"faces\": " + std::to_string(r.n_faces) + "},\n";
    out += "  \"metrics\": {\"type_macc\": " + fmt_double(r.type_macc) +
           ", \"type_miou\": " + fmt_double(r.type_miou) +
           ", \"face_acc_pooled\": " + fmt_double(r.face_acc_pooled) +
           ", \"step_macc\": " + fmt_double(r.step_macc) + ", \"r_c\": " + fmt_double(r.r_c) +
           ", \"ms_c\": " + fmt_double(r.ms_c) + "},\n";
    out += "  \"percent\": {\"type_macc\": \"" + percent1(r.type_macc) + "\", \"type_miou\": \"" +
           percent1(r.type_miou) + "\", \"step_macc\": \"" + percent1(r.step_macc) +
           "\", \"r_c\": \"" + percent1(r.r_c) + "\", \"ms_c\": \"" + percent1(r.ms_c) + "\"},\n";
    out += "  \"per_class_iou\": {";
    bool first = true;
    for (const auto& [name, iou] : r.per_class_iou) {
        if (!first) out += ", ";
        first = false;
        out += json_str(name) + ": " + fmt_double(iou);
    }
    out += "}\n}\n";
    return out;
}

inline std::string report_csv(const EvalReport& r) {
    std::string out = "model,faces,k_gt,type_acc,step_acc,consistent_steps,predicted_steps,s_c\n";
    for (const PerModelRow& m : r.per_model) {
        out += m.model + "," + std::to_string(m.faces) + "," + std::to_string(m.k_gt) + "," +
               percent1(m.type_acc) + "," + percent1(m.step_acc) + "," +
               std::to_string(m.consistent_steps) + "," + std::to_string(m.predicted_steps) + "," +
               percent1(m.s_c) + "\n";
    }
    return out;
}

struct EvalOptions {
    std::string split = "test";
    bool oracle = false;
};

// Runs the checkpoint (or the ground truth itself in oracle mode) over one
// split of a generated dataset.
inline EvalReport evaluate_dataset(const std::string& manifest_path, nn::ModelParams* mp,
                                   const EvalOptions& opt) {
    namespace fs = std::filesystem;
    Manifest man = read_manifest(manifest_path);
    fs::path dir = fs::path(manifest_path).parent_path();

    std::vector<BRep> breps;
    for (const ManifestEntry& e : man.entries) {
        if (opt.split != "all" && e.split != opt.split) continue;
        breps.push_back(load_brep((dir / e.file).string()));
    }
    if (breps.empty()) throw ValueError("no models in split '" + opt.split + "'");

    TypeVocabulary vocab = breps[0].vocabulary;
    std::vector<Prediction> preds;
    std::vector<const BRep*> ptrs;
    for (BRep& b : breps) {
        if (!(b.vocabulary == vocab)) throw VocabularyMismatch("mixed vocabularies in dataset");
        if (opt.oracle) {
            DenseSteps ds = dense_steps(b);
            preds.push_back(prediction_from_labels(b, ds.n_steps, vocab.size()));
        } else {
            if (!mp) throw ValueError("no checkpoint for evaluation");
            preds.push_back(predict(b, *mp));
        }
        ptrs.push_back(&b);
    }
    return evaluate_predictions(preds, ptrs, vocab);
}

}  // namespace cadops
