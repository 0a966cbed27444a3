#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cadops/backbone.hpp"
#include "cadops/brep.hpp"
#include "cadops/nn.hpp"

namespace cadops {

// Relaxed intersection over union, s.shat / (|s|_1 + |shat|_1 - s.shat).
// Coincides with set IoU when both vectors are binary.
inline double riou(const std::vector<double>& s, const std::vector<double>& shat) {
    if (s.size() != shat.size()) throw ShapeError("riou: length mismatch");
    double a = 0, l1s = 0, l1p = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        a += s[i] * shat[i];
        l1s += std::abs(s[i]);
        l1p += std::abs(shat[i]);
    }
    double denom = l1s + l1p - a;
    if (!(denom > 0)) throw DegenerateInput("riou: both vectors have zero mass");
    return a / denom;
}

struct Assignment {
    std::vector<int> col_of_row;  // injective, one predicted column per ground-truth column
    double total_cost = 0;
};

namespace heads_detail {

// Jonker/Volgenant-style shortest augmenting path solver for the rectangular
// min-cost assignment, n rows <= m columns. Returns col_of_row.
inline std::vector<int> lsap(const nn::Mat& a) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(a.cols());
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m) + 1, INF);
        std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = INF;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                             v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (p[static_cast<std::size_t>(j)] > 0)
            col_of_row[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return col_of_row;
}

inline double assignment_cost(const nn::Mat& a, const std::vector<int>& col_of_row) {
    double total = 0;
    for (std::size_t i = 0; i < col_of_row.size(); ++i)
        total += a(static_cast<Eigen::Index>(i), col_of_row[i]);
    return total;
}

}  // namespace heads_detail

// Minimum-cost injective assignment of rows to columns, n <= m. Among
// cost-optimal assignments the lexicographically smallest one (ordered by
// row) is returned, which pins down ties deterministically.
inline Assignment hungarian(const nn::Mat& cost) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    if (n > m) throw ShapeError("hungarian: more rows than columns");
    if (n == 0) return {};
    for (Eigen::Index i = 0; i < cost.rows(); ++i)
        for (Eigen::Index j = 0; j < cost.cols(); ++j)
            if (!std::isfinite(cost(i, j))) throw ValueError("hungarian: non-finite cost");

    std::vector<int> base = heads_detail::lsap(cost);
    const double best = heads_detail::assignment_cost(cost, base);
    const double tol = 1e-9 * std::max(1.0, std::abs(best));

    // Fix rows one by one to the smallest column that still completes to an
    // optimal assignment.
    std::vector<int> fixed(static_cast<std::size_t>(n), -1);
    std::vector<char> used_col(static_cast<std::size_t>(m), 0);
    double prefix = 0;
    for (int i = 0; i < n; ++i) {
        bool done = false;
        for (int j = 0; j < m && !done; ++j) {
            if (used_col[static_cast<std::size_t>(j)]) continue;
            double candidate = prefix + cost(i, j);
            double rest = 0;
            if (i + 1 < n) {
                nn::Mat sub(n - i - 1, m - i - 1);
                int cc = 0;
                for (int c = 0; c < m; ++c) {
                    if (used_col[static_cast<std::size_t>(c)] || c == j) continue;
                    for (int r = i + 1; r < n; ++r) sub(r - i - 1, cc) = cost(r, c);
                    ++cc;
                }
                rest = heads_detail::assignment_cost(sub, heads_detail::lsap(sub));
            }
            if (candidate + rest <= best + tol) {
                fixed[static_cast<std::size_t>(i)] = j;
                used_col[static_cast<std::size_t>(j)] = 1;
                prefix = candidate;
                done = true;
            }
        }
        if (!done) {  // numeric fallback, keep the base solution
            fixed = base;
            break;
        }
    }

    Assignment out;
    out.col_of_row = fixed;
    out.total_cost = heads_detail::assignment_cost(cost, fixed);
    return out;
}

// Column-matching cost between ground-truth step memberships (binary,
// present steps only) and predicted step probabilities.
inline Assignment align_steps(const nn::Mat& S_present, const nn::Mat& Shat) {
    if (S_present.rows() != Shat.rows()) throw ShapeError("align_steps: row mismatch");
    const int n = static_cast<int>(S_present.cols());
    const int m = static_cast<int>(Shat.cols());
    nn::Mat cost(n, m);
    for (int a = 0; a < n; ++a) {
        std::vector<double> sa(static_cast<std::size_t>(S_present.rows()));
        for (Eigen::Index r = 0; r < S_present.rows(); ++r)
            sa[static_cast<std::size_t>(r)] = S_present(r, a);
        for (int b = 0; b < m; ++b) {
            std::vector<double> sb(static_cast<std::size_t>(Shat.rows()));
            for (Eigen::Index r = 0; r < Shat.rows(); ++r)
                sb[static_cast<std::size_t>(r)] = Shat(r, b);
            double r;
            try {
                r = riou(sa, sb);
            } catch (const DegenerateInput&) {
                r = 0.0;  // an all-zero predicted column shares nothing
            }
            cost(a, b) = 1.0 - r;
        }
    }
    return hungarian(cost);
}

// Extends an injective ground-truth->predicted map to a full permutation of
// the predicted columns; unmatched positions take the remaining predicted
// columns in ascending order.
inline std::vector<int> extend_permutation(const Assignment& asg, int k_s) {
    std::vector<int> perm(static_cast<std::size_t>(k_s), -1);
    std::vector<char> taken(static_cast<std::size_t>(k_s), 0);
    for (std::size_t a = 0; a < asg.col_of_row.size(); ++a) {
        perm[a] = asg.col_of_row[a];
        taken[static_cast<std::size_t>(asg.col_of_row[a])] = 1;
    }
    int next_free = 0;
    for (std::size_t a = 0; a < perm.size(); ++a) {
        if (perm[a] >= 0) continue;
        while (taken[static_cast<std::size_t>(next_free)]) ++next_free;
        perm[a] = next_free;
        taken[static_cast<std::size_t>(next_free)] = 1;
    }
    return perm;
}

enum class AggMode { Avg, Max, SumSoftmax, SoftLabels, None };

inline AggMode parse_agg_mode(const std::string& s) {
    if (s == "avg") return AggMode::Avg;
    if (s == "max") return AggMode::Max;
    if (s == "sum_softmax") return AggMode::SumSoftmax;
    if (s == "soft_labels") return AggMode::SoftLabels;
    if (s == "none") return AggMode::None;
    throw ConfigError("unknown aggregation mode '" + s + "'");
}

inline const char* to_string(AggMode m) {
    switch (m) {
        case AggMode::Avg: return "avg";
        case AggMode::Max: return "max";
        case AggMode::SumSoftmax: return "sum_softmax";
        case AggMode::SoftLabels: return "soft_labels";
        default: return "none";
    }
}

inline int type_head_input_width(AggMode mode, int d_emb, int k_s) {
    switch (mode) {
        case AggMode::SoftLabels: return d_emb + k_s;
        case AggMode::None: return d_emb;
        default: return 2 * d_emb;
    }
}

inline void add_head_params(nn::ModelParams& mp, int d_emb, int k_s, int k_t, AggMode mode) {
    mp.add("head.step.W", d_emb, k_s);
    mp.add("head.step.b", 1, k_s);
    mp.add("head.type.W", type_head_input_width(mode, d_emb, k_s), k_t);
    mp.add("head.type.b", 1, k_t);
}

// Step-head weights start with a x20 gain on top of the uniform fan-based
// init. Embeddings are unit length, so this spreads the initial step logits
// a few units apart per face; the assignment then binds distinct columns to
// distinct steps from the first epochs instead of merging everything onto
// one column. Bias terms stay zero.
inline constexpr double kStepHeadInitGain = 20.0;

inline void init_pipeline_params(nn::ModelParams& mp, std::uint64_t seed) {
    nn::init_uniform(mp, seed);
    mp.at("head.step.W").value *= kStepHeadInitGain;
}

inline int step_head(nn::Tape& tape, int f_delta, nn::ModelParams& mp) {
    int w = tape.param(&mp.at("head.step.W"));
    int b = tape.param(&mp.at("head.step.b"));
    return tape.softmax_rows(tape.affine(f_delta, w, b));
}

inline std::vector<int> argmax_rows(const nn::Mat& m) {
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        int best = 0;
        for (Eigen::Index c = 1; c < m.cols(); ++c)
            if (m(r, c) > m(r, best)) best = static_cast<int>(c);
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

// Step membership realized by the prediction: groups of face rows sharing an
// argmax step label, ordered by label, plus the face -> group map.
inline nn::SelectionCache::Membership step_membership(const nn::Mat& shat) {
    std::vector<int> labels = argmax_rows(shat);
    std::vector<int> distinct = labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    nn::SelectionCache::Membership m;
    m.groups.resize(distinct.size());
    m.face_group.resize(labels.size());
    for (std::size_t f = 0; f < labels.size(); ++f) {
        std::size_t g = static_cast<std::size_t>(
            std::lower_bound(distinct.begin(), distinct.end(), labels[f]) - distinct.begin());
        m.groups[g].push_back(static_cast<int>(f));
        m.face_group[f] = static_cast<int>(g);
    }
    return m;
}

// Step embeddings: pool member face embeddings per predicted step, then
// hand every face its step's vector. Membership is a constant; gradients
// flow into the pooled embeddings only.
inline int aggregate_step_embeddings(nn::Tape& tape, int f_delta, int shat, AggMode mode) {
    if (mode == AggMode::SoftLabels) return shat;
    if (mode == AggMode::None) throw GraphError("no aggregation requested");

    nn::SelectionCache::Membership memb;
    nn::SelectionCache* cache = tape.cache();
    if (cache && cache->replay) {
        if (cache->memb_cursor >= cache->memberships.size())
            throw GraphError("selection cache exhausted (membership)");
        memb = cache->memberships[cache->memb_cursor++];
    } else {
        memb = step_membership(tape.value(shat));
        if (cache) cache->memberships.push_back(memb);
    }

    int pooled;
    switch (mode) {
        case AggMode::Avg:
            pooled = tape.group_reduce(f_delta, memb.groups, nn::ReduceMode::Avg);
            break;
        case AggMode::Max:
            pooled = tape.group_reduce(f_delta, memb.groups, nn::ReduceMode::Max);
            break;
        default:
            pooled = tape.softmax_rows(tape.group_reduce(f_delta, memb.groups, nn::ReduceMode::Sum));
    }
    return tape.gather_rows(pooled, memb.face_group);
}

inline int type_head(nn::Tape& tape, int f_delta, int s_agg, nn::ModelParams& mp, AggMode mode) {
    int input = mode == AggMode::None ? f_delta : tape.concat_cols({f_delta, s_agg});
    int w = tape.param(&mp.at("head.type.W"));
    int b = tape.param(&mp.at("head.type.b"));
    return tape.softmax_rows(tape.affine(input, w, b));
}

// ---------------------------------------------------------------------------
// Ground truth and losses
// ---------------------------------------------------------------------------

struct GroundTruth {
    nn::Mat S_present;  // N_f x (present steps), binary memberships
    nn::Mat S_pad;      // N_f x k_s, zero-padded one-hot rows
    nn::Mat T;          // N_f x k_t one-hot rows
    std::vector<int> face_step;  // dense
    std::vector<int> face_type;
};

inline GroundTruth make_ground_truth(const BRep& b, int k_s, int k_t) {
    DenseSteps ds = dense_steps(b);
    if (ds.n_steps > k_s)
        throw ShapeError("model '" + b.name + "' has " + std::to_string(ds.n_steps) +
                         " steps, head width is " + std::to_string(k_s));
    GroundTruth gt;
    const int nf = b.n_faces();
    gt.S_present = nn::Mat::Zero(nf, ds.n_steps);
    gt.S_pad = nn::Mat::Zero(nf, k_s);
    gt.T = nn::Mat::Zero(nf, k_t);
    gt.face_step = ds.face_step;
    for (const Face& f : b.faces) {
        int step = ds.face_step[static_cast<std::size_t>(f.id)];
        gt.S_present(f.id, step) = 1.0;
        gt.S_pad(f.id, step) = 1.0;
        int type = f.labels->op_type;
        if (type >= k_t) throw VocabularyMismatch("op_type outside head vocabulary");
        gt.T(f.id, type) = 1.0;
        gt.face_type.push_back(type);
    }
    return gt;
}

struct LossNodes {
    int step_loss = -1;
    int type_loss = -1;
    int total = -1;
    std::vector<int> ext_perm;
};

// Align predicted columns to ground truth (assignment held constant), then
// mean row RIoU loss plus mean cross entropy.
inline LossNodes attach_losses(nn::Tape& tape, int shat, int that, const GroundTruth& gt) {
    std::vector<int> perm;
    nn::SelectionCache* cache = tape.cache();
    if (cache && cache->replay) {
        if (cache->perm_cursor >= cache->perms.size())
            throw GraphError("selection cache exhausted (permutation)");
        perm = cache->perms[cache->perm_cursor++];
    } else {
        Assignment asg = align_steps(gt.S_present, tape.value(shat));
        perm = extend_permutation(asg, static_cast<int>(tape.value(shat).cols()));
        if (cache) cache->perms.push_back(perm);
    }

    LossNodes out;
    out.ext_perm = perm;
    int aligned = tape.permute_cols(shat, perm);
    out.step_loss = tape.riou_row_loss(aligned, gt.S_pad);
    out.type_loss = tape.cross_entropy_mean(that, gt.T);
    out.total = tape.add(out.step_loss, out.type_loss);
    return out;
}

// ---------------------------------------------------------------------------
// Full forward pass and prediction
// ---------------------------------------------------------------------------

struct ForwardNodes {
    int f_delta = -1;
    int shat = -1;
    int that = -1;
};

inline ForwardNodes forward_pipeline(nn::Tape& tape, const FeatureMatrices& fm,
                                     const TopologyIndices& topo, nn::ModelParams& mp) {
    BackboneConfig bc{mp.arch.d_emb, mp.arch.n_layers, mp.arch.hidden};
    AggMode mode = parse_agg_mode(mp.arch.aggregation);
    ForwardNodes out;
    out.f_delta = backbone_forward(tape, fm, topo, mp, bc);
    out.shat = step_head(tape, out.f_delta, mp);
    int s_agg = mode == AggMode::None ? -1 : aggregate_step_embeddings(tape, out.f_delta, out.shat, mode);
    out.that = type_head(tape, out.f_delta, s_agg, mp, mode);
    return out;
}

struct Prediction {
    std::string model;
    nn::Mat step_probs;
    nn::Mat type_probs;
    std::vector<int> step_labels;
    std::vector<int> type_labels;
};

// Inference: plain per-row argmax, no assignment involved.
inline Prediction predict(const BRep& b, nn::ModelParams& mp) {
    if (b.vocabulary.size() != mp.arch.k_t)
        throw ShapeError("model vocabulary size " + std::to_string(b.vocabulary.size()) +
                         " does not match checkpoint k_t " + std::to_string(mp.arch.k_t));
    NormalizedModel norm = normalize_model(b);
    FeatureMatrices fm = build_feature_matrices(norm.brep, mp.arch.grid_resolution);
    TopologyIndices topo = build_topology_indices(b);
    nn::Tape tape;
    ForwardNodes nodes = forward_pipeline(tape, fm, topo, mp);
    Prediction pred;
    pred.model = b.name;
    pred.step_probs = tape.value(nodes.shat);
    pred.type_probs = tape.value(nodes.that);
    pred.step_labels = argmax_rows(pred.step_probs);
    pred.type_labels = argmax_rows(pred.type_probs);
    return pred;
}

inline std::string prediction_json(const Prediction& p, const Provenance& prov) {
    std::string out = "{\n";
    out += "  \"format_version\": \"1\",\n";
    out += "  \"provenance\": " + prov.to_json() + ",\n";
    out += "  \"model\": " + json_str(p.model) + ",\n";
    out += "  \"faces\": [\n";
    const int nf = static_cast<int>(p.step_probs.rows());
    for (int f = 0; f < nf; ++f) {
        std::vector<double> tp, sp;
        for (Eigen::Index c = 0; c < p.type_probs.cols(); ++c) tp.push_back(p.type_probs(f, c));
        for (Eigen::Index c = 0; c < p.step_probs.cols(); ++c) sp.push_back(p.step_probs(f, c));
        out += "    {\"id\": " + std::to_string(f) +
               ", \"op_type\": " + std::to_string(p.type_labels[static_cast<std::size_t>(f)]) +
               ", \"op_step\": " + std::to_string(p.step_labels[static_cast<std::size_t>(f)]) +
               ", \"type_probs\": " + json_double_array(tp) +
               ", \"step_probs\": " + json_double_array(sp) + "}";
        out += (f + 1 < nf) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

inline Prediction parse_prediction(const std::string& text) {
    using json = nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SyntaxError(e.what(), e.byte);
    }
    Prediction p;
    p.model = doc.at("model").get<std::string>();
    const auto& faces = doc.at("faces");
    const int nf = static_cast<int>(faces.size());
    if (nf == 0) throw SchemaError("prediction: no faces");
    const int kt = static_cast<int>(faces[0].at("type_probs").size());
    const int ks = static_cast<int>(faces[0].at("step_probs").size());
    p.type_probs = nn::Mat::Zero(nf, kt);
    p.step_probs = nn::Mat::Zero(nf, ks);
    p.type_labels.resize(static_cast<std::size_t>(nf));
    p.step_labels.resize(static_cast<std::size_t>(nf));
    for (const auto& jf : faces) {
        int id = jf.at("id").get<int>();
        if (id < 0 || id >= nf) throw SchemaError("prediction: face id out of range");
        p.type_labels[static_cast<std::size_t>(id)] = jf.at("op_type").get<int>();
        p.step_labels[static_cast<std::size_t>(id)] = jf.at("op_step").get<int>();
        int c = 0;
        for (const auto& v : jf.at("type_probs")) p.type_probs(id, c++) = v.get<double>();
        c = 0;
        for (const auto& v : jf.at("step_probs")) p.step_probs(id, c++) = v.get<double>();
    }
    return p;
}

// Ground truth dressed up as a prediction, for oracle-mode evaluation.
inline Prediction prediction_from_labels(const BRep& b, int k_s, int k_t) {
    GroundTruth gt = make_ground_truth(b, k_s, k_t);
    Prediction p;
    p.model = b.name;
    p.step_probs = gt.S_pad;
    p.type_probs = gt.T;
    p.step_labels = gt.face_step;
    p.type_labels = gt.face_type;
    return p;
}

}  // namespace cadops
