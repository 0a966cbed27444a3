#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cadops/errors.hpp"
#include "cadops/features.hpp"
#include "cadops/jsonio.hpp"
#include "cadops/rng.hpp"
#include "cadops/version.hpp"

namespace cadops::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Mat from_row_matrix(const RowMatrix& m) {
    return Eigen::Map<const Mat>(m.data.data(), m.rows, m.cols);
}

inline constexpr double kLogEps = 1e-12;

// Cross entropy of a probability row against a one-hot row,
// -sum_i t_i log(max(p_i, 1e-12)).
inline double cross_entropy_row(const std::vector<double>& p, const std::vector<double>& t) {
    if (p.size() != t.size()) throw ShapeError("cross_entropy_row: length mismatch");
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (t[i] != 0.0) s -= t[i] * std::log(std::max(p[i], kLogEps));
    return s;
}

struct Param {
    std::string name;
    Mat value;
    Mat grad;

    Param(std::string n, int rows, int cols)
        : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}
};

struct ArchConfig {
    int d_emb = 64;
    int n_layers = 2;
    int hidden = 64;
    int grid_resolution = 5;
    int k_t = 0;
    int k_s = 0;
    std::string aggregation = "avg";
    std::vector<std::string> vocabulary;

    bool operator==(const ArchConfig&) const = default;
};

struct ModelParams {
    ArchConfig arch;
    std::vector<Param> params;
    std::map<std::string, std::size_t> by_name;

    Param& add(const std::string& name, int rows, int cols) {
        if (by_name.count(name)) throw ValueError("duplicate parameter name " + name);
        by_name[name] = params.size();
        params.emplace_back(name, rows, cols);
        return params.back();
    }

    Param& at(const std::string& name) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ValueError("unknown parameter " + name);
        return params[it->second];
    }

    const Param& at(const std::string& name) const {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ValueError("unknown parameter " + name);
        return params[it->second];
    }

    void zero_grads() {
        for (Param& p : params) p.grad.setZero();
    }

    void scale_grads(double s) {
        for (Param& p : params) p.grad *= s;
    }
};

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases stay zero.
inline void init_uniform(ModelParams& mp, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (Param& p : mp.params) {
        if (p.name.size() >= 2 && p.name.compare(p.name.size() - 2, 2, ".b") == 0) continue;
        double a = std::sqrt(6.0 / (p.value.rows() + p.value.cols()));
        for (Eigen::Index i = 0; i < p.value.rows(); ++i)
            for (Eigen::Index j = 0; j < p.value.cols(); ++j)
                p.value(i, j) = rng.next_uniform(-a, a);
    }
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Mat> m, v;
    long t = 0;
};

inline void adam_step(ModelParams& mp, AdamState& st, const AdamConfig& cfg) {
    if (st.m.empty()) {
        for (const Param& p : mp.params) {
            st.m.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
            st.v.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
        }
    }
    if (st.m.size() != mp.params.size()) throw ShapeError("adam state does not match params");
    st.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < mp.params.size(); ++i) {
        Param& p = mp.params[i];
        if (st.m[i].rows() != p.grad.rows() || st.m[i].cols() != p.grad.cols())
            throw ShapeError("adam state shape mismatch for " + p.name);
        st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * p.grad;
        st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * p.grad.cwiseProduct(p.grad);
        Mat mhat = st.m[i] / bc1;
        Mat vhat = st.v[i] / bc2;
        p.value.array() -= cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
    }
}

// ---------------------------------------------------------------------------
// Reverse-mode tape
// ---------------------------------------------------------------------------

// Selections (pool argmaxes, step memberships, assignment permutations) that
// must be held fixed while a loss is re-evaluated, e.g. for finite-difference
// checks. Record on the first pass, then rewind() and replay.
struct SelectionCache {
    bool replay = false;

    std::vector<std::vector<int>> pool_argmax;
    std::size_t pool_cursor = 0;

    struct Membership {
        std::vector<std::vector<int>> groups;
        std::vector<int> face_group;
    };
    std::vector<Membership> memberships;
    std::size_t memb_cursor = 0;

    std::vector<std::vector<int>> perms;
    std::size_t perm_cursor = 0;

    void rewind() {
        pool_cursor = memb_cursor = perm_cursor = 0;
        replay = true;
    }
};

enum class ReduceMode { Avg, Max, Sum };

class Tape {
  public:
    explicit Tape(SelectionCache* cache = nullptr) : cache_(cache) {}

    int input(Mat value) { return push(OpKind::Input, {}, std::move(value)); }

    int param(Param* p) {
        int id = push(OpKind::Param, {}, p->value);
        nodes_[static_cast<std::size_t>(id)].param = p;
        return id;
    }

    // y = x W + b with x: B x m, W: m x n, b: 1 x n
    int affine(int x, int w, int b) {
        const Mat& X = val(x);
        const Mat& W = val(w);
        const Mat& B = val(b);
        if (X.cols() != W.rows()) throw ShapeError("affine: x cols != W rows");
        if (B.rows() != 1 || B.cols() != W.cols()) throw ShapeError("affine: bad bias shape");
        Mat y = X * W;
        y.rowwise() += B.row(0);
        return push(OpKind::Affine, {x, w, b}, std::move(y));
    }

    int relu(int x) {
        Mat y = val(x).cwiseMax(0.0);
        return push(OpKind::Relu, {x}, std::move(y));
    }

    // Rows scaled to unit Euclidean norm; all-zero rows pass through.
    int normalize_rows(int x) {
        const Mat& X = val(x);
        Mat y(X.rows(), X.cols());
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            double n = std::max(X.row(r).norm(), 1e-12);
            y.row(r) = X.row(r) / n;
        }
        return push(OpKind::NormalizeRows, {x}, std::move(y));
    }

    int softmax_rows(int x) {
        const Mat& X = val(x);
        Mat y(X.rows(), X.cols());
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            double mx = X.row(r).maxCoeff();
            Eigen::ArrayXd e = (X.row(r).array() - mx).exp();
            y.row(r) = (e / e.sum()).matrix();
        }
        return push(OpKind::Softmax, {x}, std::move(y));
    }

    // Mean over rows of the one-hot cross entropy against constant targets.
    int cross_entropy_mean(int p, Mat targets) {
        const Mat& P = val(p);
        if (P.rows() != targets.rows() || P.cols() != targets.cols())
            throw ShapeError("cross_entropy_mean: shape mismatch");
        double total = 0;
        for (Eigen::Index r = 0; r < P.rows(); ++r)
            for (Eigen::Index c = 0; c < P.cols(); ++c)
                if (targets(r, c) != 0.0)
                    total -= targets(r, c) * std::log(std::max(P(r, c), kLogEps));
        Mat y(1, 1);
        y(0, 0) = total / static_cast<double>(P.rows());
        int id = push(OpKind::CrossEntropy, {p}, std::move(y));
        nodes_[static_cast<std::size_t>(id)].constant = std::move(targets);
        return id;
    }

    int concat_cols(const std::vector<int>& xs) {
        if (xs.empty()) throw GraphError("concat_cols: no inputs");
        Eigen::Index rows = val(xs[0]).rows(), cols = 0;
        for (int x : xs) {
            if (val(x).rows() != rows) throw ShapeError("concat_cols: row mismatch");
            cols += val(x).cols();
        }
        Mat y(rows, cols);
        Eigen::Index at = 0;
        for (int x : xs) {
            y.middleCols(at, val(x).cols()) = val(x);
            at += val(x).cols();
        }
        return push(OpKind::ConcatCols, xs, std::move(y));
    }

    int gather_rows(int x, std::vector<int> idx) {
        const Mat& X = val(x);
        Mat y(static_cast<Eigen::Index>(idx.size()), X.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            if (idx[r] < 0 || idx[r] >= X.rows()) throw ShapeError("gather_rows: index out of range");
            y.row(static_cast<Eigen::Index>(r)) = X.row(idx[r]);
        }
        int id = push(OpKind::GatherRows, {x}, std::move(y));
        nodes_[static_cast<std::size_t>(id)].indices = std::move(idx);
        return id;
    }

    // One output row per group. Avg and Sum spread gradients over members;
    // Max routes to the member selected in the forward pass (first maximum
    // in member order, members listed ascending).
    int group_reduce(int x, const std::vector<std::vector<int>>& groups, ReduceMode mode) {
        const Mat& X = val(x);
        Mat y(static_cast<Eigen::Index>(groups.size()), X.cols());
        std::vector<int> argmax;
        const bool replay = cache_ && cache_->replay && mode == ReduceMode::Max;
        if (replay) {
            if (cache_->pool_cursor >= cache_->pool_argmax.size())
                throw GraphError("selection cache exhausted");
            argmax = cache_->pool_argmax[cache_->pool_cursor++];
        }
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].empty()) throw ShapeError("group_reduce: empty group");
            if (mode == ReduceMode::Avg || mode == ReduceMode::Sum) {
                Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(X.cols());
                for (int r : groups[g]) acc += X.row(r);
                if (mode == ReduceMode::Avg) acc /= static_cast<double>(groups[g].size());
                y.row(static_cast<Eigen::Index>(g)) = acc;
            } else {
                for (Eigen::Index c = 0; c < X.cols(); ++c) {
                    int best;
                    if (replay) {
                        best = argmax[g * static_cast<std::size_t>(X.cols()) +
                                      static_cast<std::size_t>(c)];
                    } else {
                        best = groups[g][0];
                        for (int r : groups[g])
                            if (X(r, c) > X(best, c)) best = r;
                    }
                    y(static_cast<Eigen::Index>(g), c) = X(best, c);
                    if (!replay) argmax.push_back(best);
                }
            }
        }
        if (mode == ReduceMode::Max && !replay) {
            // re-walk in (group, col) order: argmax above was appended per
            // group then per column, which is already that order
            if (cache_ && !cache_->replay) cache_->pool_argmax.push_back(argmax);
        }
        int id = push(OpKind::GroupReduce, {x}, std::move(y));
        Node& n = nodes_[static_cast<std::size_t>(id)];
        n.groups = groups;
        n.mode = mode;
        n.indices = std::move(argmax);
        return id;
    }

    int permute_cols(int x, std::vector<int> perm) {
        const Mat& X = val(x);
        if (static_cast<Eigen::Index>(perm.size()) != X.cols())
            throw ShapeError("permute_cols: permutation size mismatch");
        Mat y(X.rows(), X.cols());
        for (std::size_t j = 0; j < perm.size(); ++j)
            y.col(static_cast<Eigen::Index>(j)) = X.col(perm[j]);
        int id = push(OpKind::PermuteCols, {x}, std::move(y));
        nodes_[static_cast<std::size_t>(id)].indices = std::move(perm);
        return id;
    }

    // (1/N) sum_j (1 - riou(s_j, shat_j)) against constant binary rows s_j.
    int riou_row_loss(int shat, Mat s_true) {
        const Mat& P = val(shat);
        if (P.rows() != s_true.rows() || P.cols() != s_true.cols())
            throw ShapeError("riou_row_loss: shape mismatch");
        double total = 0;
        for (Eigen::Index r = 0; r < P.rows(); ++r) {
            double a = 0, l1s = 0, l1p = 0;
            for (Eigen::Index c = 0; c < P.cols(); ++c) {
                a += s_true(r, c) * P(r, c);
                l1s += std::abs(s_true(r, c));
                l1p += std::abs(P(r, c));
            }
            double denom = l1s + l1p - a;
            if (!(denom > 0)) throw DegenerateInput("riou: zero denominator");
            total += 1.0 - a / denom;
        }
        Mat y(1, 1);
        y(0, 0) = total / static_cast<double>(P.rows());
        int id = push(OpKind::RiouRowLoss, {shat}, std::move(y));
        nodes_[static_cast<std::size_t>(id)].constant = std::move(s_true);
        return id;
    }

    int add(int a, int b) {
        if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
            throw ShapeError("add: shape mismatch");
        Mat y = val(a) + val(b);
        return push(OpKind::Add, {a, b}, std::move(y));
    }

    int mul(int a, int b) {
        if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols())
            throw ShapeError("mul: shape mismatch");
        Mat y = val(a).cwiseProduct(val(b));
        return push(OpKind::Mul, {a, b}, std::move(y));
    }

    int scale(int x, double s) {
        Mat y = val(x) * s;
        int id = push(OpKind::Scale, {x}, std::move(y));
        nodes_[static_cast<std::size_t>(id)].scalar = s;
        return id;
    }

    int mean_all(int x) {
        Mat y(1, 1);
        y(0, 0) = val(x).mean();
        return push(OpKind::MeanAll, {x}, std::move(y));
    }

    const Mat& value(int id) const { return val(id); }

    // Reverse sweep from a scalar loss. Parameter gradients accumulate into
    // the referenced Param objects.
    void backward(int loss) {
        Mat& lv = nodes_.at(static_cast<std::size_t>(loss)).value;
        if (lv.rows() != 1 || lv.cols() != 1) throw GraphError("backward: loss must be 1x1");
        for (Node& n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
        nodes_[static_cast<std::size_t>(loss)].grad(0, 0) = 1.0;

        for (int id = loss; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (n.grad.size() == 0 || n.grad.isZero(0)) {
                if (n.op != OpKind::Param) continue;
            }
            switch (n.op) {
                case OpKind::Input:
                    break;
                case OpKind::Param:
                    if (n.param) n.param->grad += n.grad;
                    break;
                case OpKind::Affine: {
                    const Mat& X = val(n.in[0]);
                    const Mat& W = val(n.in[1]);
                    grad(n.in[0]) += n.grad * W.transpose();
                    grad(n.in[1]) += X.transpose() * n.grad;
                    grad(n.in[2]) += n.grad.colwise().sum();
                    break;
                }
                case OpKind::Relu: {
                    const Mat& X = val(n.in[0]);
                    grad(n.in[0]) += (X.array() > 0.0).cast<double>().matrix().cwiseProduct(n.grad);
                    break;
                }
                case OpKind::NormalizeRows: {
                    const Mat& X = val(n.in[0]);
                    const Mat& Y = n.value;
                    Mat& gx = grad(n.in[0]);
                    for (Eigen::Index r = 0; r < X.rows(); ++r) {
                        double nr = std::max(X.row(r).norm(), 1e-12);
                        double proj = n.grad.row(r).dot(Y.row(r));
                        gx.row(r) += (n.grad.row(r) - proj * Y.row(r)) / nr;
                    }
                    break;
                }
                case OpKind::Softmax: {
                    const Mat& Y = n.value;
                    Mat& gx = grad(n.in[0]);
                    for (Eigen::Index r = 0; r < Y.rows(); ++r) {
                        double dotv = n.grad.row(r).dot(Y.row(r));
                        gx.row(r) += (n.grad.row(r).array() - dotv).matrix().cwiseProduct(Y.row(r));
                    }
                    break;
                }
                case OpKind::CrossEntropy: {
                    const Mat& P = val(n.in[0]);
                    const Mat& T = n.constant;
                    double g = n.grad(0, 0) / static_cast<double>(P.rows());
                    Mat& gp = grad(n.in[0]);
                    for (Eigen::Index r = 0; r < P.rows(); ++r)
                        for (Eigen::Index c = 0; c < P.cols(); ++c)
                            if (T(r, c) != 0.0 && P(r, c) > kLogEps)
                                gp(r, c) -= g * T(r, c) / P(r, c);
                    break;
                }
                case OpKind::ConcatCols: {
                    Eigen::Index at = 0;
                    for (int x : n.in) {
                        grad(x) += n.grad.middleCols(at, val(x).cols());
                        at += val(x).cols();
                    }
                    break;
                }
                case OpKind::GatherRows: {
                    Mat& gx = grad(n.in[0]);
                    for (std::size_t r = 0; r < n.indices.size(); ++r)
                        gx.row(n.indices[r]) += n.grad.row(static_cast<Eigen::Index>(r));
                    break;
                }
                case OpKind::GroupReduce: {
                    Mat& gx = grad(n.in[0]);
                    if (n.mode == ReduceMode::Max) {
                        const Eigen::Index cols = n.value.cols();
                        for (std::size_t g = 0; g < n.groups.size(); ++g)
                            for (Eigen::Index c = 0; c < cols; ++c)
                                gx(n.indices[g * static_cast<std::size_t>(cols) +
                                             static_cast<std::size_t>(c)],
                                   c) += n.grad(static_cast<Eigen::Index>(g), c);
                    } else {
                        for (std::size_t g = 0; g < n.groups.size(); ++g) {
                            double w = n.mode == ReduceMode::Avg
                                           ? 1.0 / static_cast<double>(n.groups[g].size())
                                           : 1.0;
                            for (int r : n.groups[g])
                                gx.row(r) += w * n.grad.row(static_cast<Eigen::Index>(g));
                        }
                    }
                    break;
                }
                case OpKind::PermuteCols: {
                    Mat& gx = grad(n.in[0]);
                    for (std::size_t j = 0; j < n.indices.size(); ++j)
                        gx.col(n.indices[j]) += n.grad.col(static_cast<Eigen::Index>(j));
                    break;
                }
                case OpKind::RiouRowLoss: {
                    const Mat& P = val(n.in[0]);
                    const Mat& S = n.constant;
                    double g = n.grad(0, 0) / static_cast<double>(P.rows());
                    Mat& gp = grad(n.in[0]);
                    for (Eigen::Index r = 0; r < P.rows(); ++r) {
                        double a = 0, l1s = 0, l1p = 0;
                        for (Eigen::Index c = 0; c < P.cols(); ++c) {
                            a += S(r, c) * P(r, c);
                            l1s += std::abs(S(r, c));
                            l1p += std::abs(P(r, c));
                        }
                        double denom = l1s + l1p - a;
                        for (Eigen::Index c = 0; c < P.cols(); ++c) {
                            double sgn = P(r, c) > 0 ? 1.0 : (P(r, c) < 0 ? -1.0 : 0.0);
                            double driou = (S(r, c) * denom - a * (sgn - S(r, c))) / (denom * denom);
                            gp(r, c) -= g * driou;
                        }
                    }
                    break;
                }
                case OpKind::Add:
                    grad(n.in[0]) += n.grad;
                    grad(n.in[1]) += n.grad;
                    break;
                case OpKind::Mul:
                    grad(n.in[0]) += n.grad.cwiseProduct(val(n.in[1]));
                    grad(n.in[1]) += n.grad.cwiseProduct(val(n.in[0]));
                    break;
                case OpKind::Scale:
                    grad(n.in[0]) += n.grad * n.scalar;
                    break;
                case OpKind::MeanAll: {
                    const Mat& X = val(n.in[0]);
                    grad(n.in[0]) +=
                        Mat::Constant(X.rows(), X.cols(),
                                      n.grad(0, 0) / static_cast<double>(X.size()));
                    break;
                }
            }
        }
    }

    SelectionCache* cache() { return cache_; }

  private:
    enum class OpKind {
        Input,
        Param,
        Affine,
        Relu,
        NormalizeRows,
        Softmax,
        CrossEntropy,
        ConcatCols,
        GatherRows,
        GroupReduce,
        PermuteCols,
        RiouRowLoss,
        Add,
        Mul,
        Scale,
        MeanAll
    };

    struct Node {
        OpKind op;
        std::vector<int> in;
        Mat value;
        Mat grad;
        Mat constant;               // targets for losses
        std::vector<int> indices;   // gather rows / permutation / max argmax
        std::vector<std::vector<int>> groups;
        ReduceMode mode = ReduceMode::Avg;
        double scalar = 0;
        Param* param = nullptr;
    };

    const Mat& val(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
    Mat& grad(int id) { return nodes_.at(static_cast<std::size_t>(id)).grad; }

    int push(OpKind op, std::vector<int> in, Mat value) {
        for (int i : in)
            if (i < 0 || i >= static_cast<int>(nodes_.size()))
                throw GraphError("node reference out of range");
        Node n;
        n.op = op;
        n.in = std::move(in);
        n.value = std::move(value);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
    SelectionCache* cache_ = nullptr;
};

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline std::string arch_config_json(const ArchConfig& a) {
    std::string vocab = "[";
    for (std::size_t i = 0; i < a.vocabulary.size(); ++i) {
        if (i) vocab += ", ";
        vocab += json_str(a.vocabulary[i]);
    }
    vocab += "]";
    return "{\"d_emb\": " + std::to_string(a.d_emb) + ", \"n_layers\": " + std::to_string(a.n_layers) +
           ", \"hidden\": " + std::to_string(a.hidden) +
           ", \"grid_resolution\": " + std::to_string(a.grid_resolution) +
           ", \"k_t\": " + std::to_string(a.k_t) + ", \"k_s\": " + std::to_string(a.k_s) +
           ", \"aggregation\": " + json_str(a.aggregation) + ", \"vocabulary\": " + vocab + "}";
}

inline std::string checkpoint_json(const ModelParams& mp, const Provenance& prov) {
    std::string out = "{\n";
    out += "  \"format_version\": \"1\",\n";
    out += "  \"provenance\": " + prov.to_json() + ",\n";
    out += "  \"arch_config\": " + arch_config_json(mp.arch) + ",\n";
    out += "  \"params\": [\n";
    for (std::size_t i = 0; i < mp.params.size(); ++i) {
        const Param& p = mp.params[i];
        std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
        out += "    {\"name\": " + json_str(p.name) + ", \"shape\": [" +
               std::to_string(p.value.rows()) + ", " + std::to_string(p.value.cols()) +
               "], \"data\": " + json_double_array(data) + "}";
        out += (i + 1 < mp.params.size()) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

inline void save_params(const ModelParams& mp, const std::string& path, const Provenance& prov) {
    write_file(path, checkpoint_json(mp, prov));
}

inline ModelParams load_params(const std::string& path) {
    using json = nlohmann::json;
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw VersionError(std::string("unreadable checkpoint: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("format_version") ||
        !doc["format_version"].is_string() || doc["format_version"].get<std::string>() != "1")
        throw VersionError("checkpoint format_version missing or unsupported");
    if (!doc.contains("arch_config") || !doc.contains("params"))
        throw VersionError("checkpoint missing arch_config or params");

    ModelParams mp;
    const json& a = doc["arch_config"];
    mp.arch.d_emb = a.at("d_emb").get<int>();
    mp.arch.n_layers = a.at("n_layers").get<int>();
    mp.arch.hidden = a.at("hidden").get<int>();
    mp.arch.grid_resolution = a.at("grid_resolution").get<int>();
    mp.arch.k_t = a.at("k_t").get<int>();
    mp.arch.k_s = a.at("k_s").get<int>();
    mp.arch.aggregation = a.at("aggregation").get<std::string>();
    for (const auto& v : a.at("vocabulary")) mp.arch.vocabulary.push_back(v.get<std::string>());

    for (const auto& jp : doc["params"]) {
        std::string name = jp.at("name").get<std::string>();
        const auto& shape = jp.at("shape");
        int rows = shape.at(0).get<int>();
        int cols = shape.at(1).get<int>();
        const auto& data = jp.at("data");
        if (static_cast<Eigen::Index>(data.size()) !=
            static_cast<Eigen::Index>(rows) * static_cast<Eigen::Index>(cols))
            throw ShapeError("checkpoint: data length does not match shape for " + name);
        Param& p = mp.add(name, rows, cols);
        Eigen::Index i = 0;
        for (const auto& v : data) p.value.data()[i++] = v.get<double>();
    }
    return mp;
}

}  // namespace cadops::nn
