#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "cadops/heads.hpp"
#include "cadops/metrics.hpp"

namespace cadops {

struct RunConfig {
    std::uint64_t seed = 0;
    int epochs = 200;
    int batch_size = 100;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    int grid_resolution = 5;
    int n_layers = 2;
    int d_emb = 64;
    int hidden = 64;
    std::string aggregation = "avg";
    int k_s = 0;  // 0 = training-set maximum
    double loss_w_step = 1.0;
    double loss_w_type = 1.0;
    double dropout = 0.0;  // reserved
    int threads = 0;  // 0 = all cores; reductions stay in model order either way

    void validate() const {
        if (epochs <= 0 || batch_size <= 0 || grid_resolution < 2 || n_layers <= 0 || d_emb <= 0 ||
            hidden <= 0)
            throw ConfigError("hyperparameters must be positive");
        if (!(lr > 0) || !(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
            throw ConfigError("bad optimizer settings");
        if (k_s < 0) throw ConfigError("k_s must be >= 0 (0 = auto)");
        if (dropout != 0.0) throw ConfigError("dropout is reserved; only 0 is supported");
        if (threads < 0) throw ConfigError("threads must be >= 0");
        parse_agg_mode(aggregation);
    }

    std::string to_json() const {
        return "{\"seed\": " + std::to_string(seed) + ", \"epochs\": " + std::to_string(epochs) +
               ", \"batch_size\": " + std::to_string(batch_size) + ", \"lr\": " + fmt_double(lr) +
               ", \"beta1\": " + fmt_double(beta1) + ", \"beta2\": " + fmt_double(beta2) +
               ", \"grid_resolution\": " + std::to_string(grid_resolution) +
               ", \"n_layers\": " + std::to_string(n_layers) +
               ", \"d_emb\": " + std::to_string(d_emb) + ", \"hidden\": " + std::to_string(hidden) +
               ", \"aggregation\": " + json_str(aggregation) +
               ", \"k_s\": " + std::to_string(k_s) +
               ", \"loss_w_step\": " + fmt_double(loss_w_step) +
               ", \"loss_w_type\": " + fmt_double(loss_w_type) +
               ", \"dropout\": " + fmt_double(dropout) +
               ", \"threads\": " + std::to_string(threads) + "}";
    }
};

// Config file: a flat JSON object with RunConfig keys. Unknown keys are
// rejected by name; command-line flags override file values.
inline RunConfig load_config(const std::string& path) {
    using json = nlohmann::json;
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& k = it.key();
        try {
            if (k == "seed") cfg.seed = it->get<std::uint64_t>();
            else if (k == "epochs") cfg.epochs = it->get<int>();
            else if (k == "batch_size") cfg.batch_size = it->get<int>();
            else if (k == "lr") cfg.lr = it->get<double>();
            else if (k == "beta1") cfg.beta1 = it->get<double>();
            else if (k == "beta2") cfg.beta2 = it->get<double>();
            else if (k == "grid_resolution") cfg.grid_resolution = it->get<int>();
            else if (k == "n_layers") cfg.n_layers = it->get<int>();
            else if (k == "d_emb") cfg.d_emb = it->get<int>();
            else if (k == "hidden") cfg.hidden = it->get<int>();
            else if (k == "aggregation") cfg.aggregation = it->get<std::string>();
            else if (k == "k_s") cfg.k_s = it->get<int>();
            else if (k == "loss_w_step") cfg.loss_w_step = it->get<double>();
            else if (k == "loss_w_type") cfg.loss_w_type = it->get<double>();
            else if (k == "dropout") cfg.dropout = it->get<double>();
            else if (k == "threads") cfg.threads = it->get<int>();
            else throw ConfigError("unknown config key '" + k + "'");
        } catch (const json::exception&) {
            throw ConfigError("bad value for config key '" + k + "'");
        }
    }
    cfg.validate();
    return cfg;
}

struct TrainingModel {
    BRep brep;
    FeatureMatrices features;
    TopologyIndices topo;
    GroundTruth gt;
};

struct EpochLoss {
    int epoch = 0;
    double step = 0;
    double type = 0;
    double total = 0;
};

struct TrainResult {
    nn::ModelParams params;
    std::vector<EpochLoss> log;
};

inline std::vector<BRep> load_split(const std::string& manifest_path, const std::string& split) {
    namespace fs = std::filesystem;
    Manifest man = read_manifest(manifest_path);
    fs::path dir = fs::path(manifest_path).parent_path();
    std::vector<BRep> out;
    for (const ManifestEntry& e : man.entries)
        if (split == "all" || e.split == split) out.push_back(load_brep((dir / e.file).string()));
    return out;
}

namespace traindetail {

struct ModelPass {
    double loss_step = 0, loss_type = 0, loss_total = 0;
    std::vector<nn::Mat> grads;
};

inline ModelPass run_model(TrainingModel& tm, nn::ModelParams& shared, const RunConfig& cfg) {
    // gradients land in a private copy so passes can run concurrently and
    // reduce in model order afterwards
    nn::ModelParams local = shared;
    local.zero_grads();
    nn::Tape tape;
    ForwardNodes fwd = forward_pipeline(tape, tm.features, tm.topo, local);
    LossNodes loss = attach_losses(tape, fwd.shat, fwd.that, tm.gt);
    int total = loss.total;
    if (cfg.loss_w_step != 1.0 || cfg.loss_w_type != 1.0)
        total = tape.add(tape.scale(loss.step_loss, cfg.loss_w_step),
                         tape.scale(loss.type_loss, cfg.loss_w_type));
    tape.backward(total);
    ModelPass out;
    out.loss_step = tape.value(loss.step_loss)(0, 0);
    out.loss_type = tape.value(loss.type_loss)(0, 0);
    out.loss_total = tape.value(total)(0, 0);
    out.grads.reserve(local.params.size());
    for (nn::Param& p : local.params) out.grads.push_back(std::move(p.grad));
    return out;
}

}  // namespace traindetail

// Mini-batch Adam over whole models; the batch gradient is the mean of
// per-model gradients reduced in model-id order, so a run is reproducible
// for a fixed seed regardless of thread count.
inline TrainResult train_run(std::vector<BRep> models, const RunConfig& cfg) {
    cfg.validate();
    if (models.empty()) throw ValueError("training split is empty");

    TypeVocabulary vocab = models[0].vocabulary;
    for (const BRep& b : models)
        if (!(b.vocabulary == vocab)) throw VocabularyMismatch("mixed vocabularies in dataset");

    std::vector<TrainingModel> tms;
    int max_steps = 1;
    for (BRep& b : models) {
        TrainingModel tm;
        tm.brep = std::move(b);
        NormalizedModel norm = normalize_model(tm.brep);
        tm.features = build_feature_matrices(norm.brep, cfg.grid_resolution);
        tm.topo = build_topology_indices(tm.brep);
        max_steps = std::max(max_steps, dense_steps(tm.brep).n_steps);
        tms.push_back(std::move(tm));
    }
    const int k_s = cfg.k_s > 0 ? cfg.k_s : max_steps;
    const int k_t = vocab.size();
    for (TrainingModel& tm : tms) tm.gt = make_ground_truth(tm.brep, k_s, k_t);

    TrainResult res;
    res.params.arch = {cfg.d_emb, cfg.n_layers, cfg.hidden, cfg.grid_resolution,
                       k_t,       k_s,          cfg.aggregation, vocab.names};
    AggMode mode = parse_agg_mode(cfg.aggregation);
    add_backbone_params(res.params, tms[0].features.d_f(), tms[0].features.d_e(),
                        tms[0].features.d_c(), {cfg.d_emb, cfg.n_layers, cfg.hidden});
    add_head_params(res.params, cfg.d_emb, k_s, k_t, mode);
    init_pipeline_params(res.params, substream_seed(cfg.seed, 0));

    nn::AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
    nn::AdamState state;

    const int n = static_cast<int>(tms.size());
    unsigned hw = std::thread::hardware_concurrency();
    const int threads = cfg.threads > 0 ? cfg.threads : std::max(1u, hw);

    std::vector<int> order(tms.size());
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SplitMix64 shuffle_rng(substream_seed(cfg.seed, 1000003ULL + static_cast<std::uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(shuffle_rng.next_below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double ep_step = 0, ep_type = 0, ep_total = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - start);
            std::vector<traindetail::ModelPass> passes(static_cast<std::size_t>(count));

            auto work = [&](int begin, int end) {
                for (int i = begin; i < end; ++i)
                    passes[static_cast<std::size_t>(i)] = traindetail::run_model(
                        tms[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])],
                        res.params, cfg);
            };
            if (threads <= 1 || count == 1) {
                work(0, count);
            } else {
                std::vector<std::thread> pool;
                int chunk = (count + threads - 1) / threads;
                for (int t = 0; t < threads && t * chunk < count; ++t)
                    pool.emplace_back(work, t * chunk, std::min(count, (t + 1) * chunk));
                for (auto& th : pool) th.join();
            }

            res.params.zero_grads();
            for (int i = 0; i < count; ++i) {
                const auto& pass = passes[static_cast<std::size_t>(i)];
                for (std::size_t p = 0; p < res.params.params.size(); ++p)
                    res.params.params[p].grad += pass.grads[p];
                ep_step += pass.loss_step;
                ep_type += pass.loss_type;
                ep_total += pass.loss_total;
            }
            res.params.scale_grads(1.0 / count);
            nn::adam_step(res.params, state, adam);
        }
        res.log.push_back({epoch, ep_step / n, ep_type / n, ep_total / n});
    }
    return res;
}

inline std::string loss_log_csv(const std::vector<EpochLoss>& log) {
    std::string out = "epoch,L_step,L_type,L_total\n";
    for (const EpochLoss& e : log)
        out += std::to_string(e.epoch) + "," + fmt_double(e.step) + "," + fmt_double(e.type) + "," +
               fmt_double(e.total) + "\n";
    return out;
}

}  // namespace cadops
