// Command-line front end: generate -> validate -> train -> eval -> predict
// -> sketch over the B-Rep JSON pipeline.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "cadops/brep_io.hpp"
#include "cadops/generator.hpp"
#include "cadops/heads.hpp"
#include "cadops/metrics.hpp"
#include "cadops/sketch.hpp"
#include "cadops/train.hpp"
#include "cadops/version.hpp"

namespace {

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value) {
    if (opt->count() > 0) return flag_value;
    if (const char* env = std::getenv("CADOPS_SEED")) return std::strtoull(env, nullptr, 10);
    return flag_value;
}

void parse_steps_range(const std::string& s, int& lo, int& hi) {
    try {
        auto pos = s.find("..");
        if (pos == std::string::npos) {
            lo = hi = std::stoi(s);
            return;
        }
        lo = std::stoi(s.substr(0, pos));
        hi = std::stoi(s.substr(pos + 2));
    } catch (const std::exception&) {
        throw cadops::ConfigError("--steps expects N or A..B, got '" + s + "'");
    }
}

void apply_config_overrides(cadops::RunConfig& cfg, const CLI::App* cmd) {
    auto has = [&](const std::string& name) { return cmd->get_option(name)->count() > 0; };
    if (has("--seed")) cfg.seed = cmd->get_option("--seed")->as<std::uint64_t>();
    if (has("--epochs")) cfg.epochs = cmd->get_option("--epochs")->as<int>();
    if (has("--batch-size")) cfg.batch_size = cmd->get_option("--batch-size")->as<int>();
    if (has("--lr")) cfg.lr = cmd->get_option("--lr")->as<double>();
    if (has("--grid-res")) cfg.grid_resolution = cmd->get_option("--grid-res")->as<int>();
    if (has("--n-layers")) cfg.n_layers = cmd->get_option("--n-layers")->as<int>();
    if (has("--d-emb")) cfg.d_emb = cmd->get_option("--d-emb")->as<int>();
    if (has("--hidden")) cfg.hidden = cmd->get_option("--hidden")->as<int>();
    if (has("--agg")) cfg.aggregation = cmd->get_option("--agg")->as<std::string>();
    if (has("--k-s")) cfg.k_s = cmd->get_option("--k-s")->as<int>();
    if (has("--threads")) cfg.threads = cmd->get_option("--threads")->as<int>();
    if (has("--dropout")) cfg.dropout = cmd->get_option("--dropout")->as<double>();
    if (has("--loss-weights")) {
        std::string w = cmd->get_option("--loss-weights")->as<std::string>();
        auto comma = w.find(',');
        if (comma == std::string::npos)
            throw cadops::ConfigError("--loss-weights expects 'w_step,w_type'");
        cfg.loss_w_step = std::stod(w.substr(0, comma));
        cfg.loss_w_type = std::stod(w.substr(comma + 1));
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace cadops;
    namespace fs = std::filesystem;

    CLI::App app{"CAD operation type/step segmentation pipeline"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a labeled synthetic dataset");
    int gen_count = 1;
    std::uint64_t gen_seed = 0;
    std::string gen_steps = "1..4";
    std::string gen_out = "dataset";
    std::string gen_profile = "polygon";
    bool gen_no_cuts = false;
    int gen_ks_cap = 16;
    gen->add_option("--count", gen_count, "number of models");
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "dataset seed");
    gen->add_option("--steps", gen_steps, "steps per model, e.g. 1..4");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--profile", gen_profile, "base profile: rect | polygon");
    gen->add_flag("--no-cuts", gen_no_cuts, "extrusions only, no pockets");
    gen->add_option("--ks-cap", gen_ks_cap, "upper bound on steps per model");

    // validate
    auto* val = app.add_subcommand("validate", "check topology invariants of a model file");
    std::string val_input;
    std::string val_dump;
    int val_grid = 5;
    val->add_option("--input", val_input, "model .brep.json")->required();
    val->add_option("--dump-features", val_dump, "write feature matrices to this JSON file");
    val->add_option("--grid-res", val_grid, "grid resolution for the feature dump");

    // shared training-style options
    auto add_run_options = [](CLI::App* cmd) {
        cmd->add_option("--config", "JSON config file");
        cmd->add_option("--seed", "run seed");
        cmd->add_option("--epochs", "training epochs");
        cmd->add_option("--batch-size", "models per batch");
        cmd->add_option("--lr", "learning rate");
        cmd->add_option("--grid-res", "UV grid resolution");
        cmd->add_option("--n-layers", "convolution layers");
        cmd->add_option("--d-emb", "embedding width");
        cmd->add_option("--hidden", "hidden width");
        cmd->add_option("--agg", "aggregation: avg|max|sum_softmax|soft_labels|none");
        cmd->add_option("--k-s", "step-head width (0 = training-set max)");
        cmd->add_option("--threads", "worker threads (0 = all cores)");
        cmd->add_option("--dropout", "reserved, must be 0");
        cmd->add_option("--loss-weights", "step,type loss weights (experimentation)");
    };

    // train
    auto* train = app.add_subcommand("train", "train a checkpoint on a dataset split");
    std::string train_manifest, train_out = "model.ckpt.json", train_log = "loss_log.csv";
    std::string train_split = "train";
    train->add_option("--manifest", train_manifest, "dataset manifest.json")->required();
    train->add_option("--out", train_out, "checkpoint output path");
    train->add_option("--log", train_log, "per-epoch loss CSV");
    train->add_option("--split", train_split, "train | val | test | all");
    add_run_options(train);

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    std::string eval_manifest, eval_ckpt, eval_json = "report.json", eval_csv = "report.csv";
    std::string eval_split = "test";
    bool eval_oracle = false;
    eval->add_option("--manifest", eval_manifest, "dataset manifest.json")->required();
    eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint");
    eval->add_option("--out-json", eval_json, "report JSON path");
    eval->add_option("--out-csv", eval_csv, "per-model CSV path");
    eval->add_option("--split", eval_split, "train | val | test | all");
    eval->add_flag("--oracle", eval_oracle, "use ground-truth labels as predictions");

    // predict
    auto* pred = app.add_subcommand("predict", "predict per-face labels for one model");
    std::string pred_input, pred_ckpt, pred_out = "prediction.json", pred_dump;
    pred->add_option("--input", pred_input, "model .brep.json")->required();
    pred->add_option("--checkpoint", pred_ckpt, "trained checkpoint")->required();
    pred->add_option("--out", pred_out, "prediction JSON path");
    pred->add_option("--dump-features", pred_dump, "also write feature matrices here");

    // sketch
    auto* sk = app.add_subcommand("sketch", "recover per-step 2D sketches from a prediction");
    std::string sk_pred, sk_brep, sk_out = "sketches";
    bool sk_cuts = false, sk_grid = false;
    sk->add_option("--input", sk_pred, "prediction JSON")->required();
    sk->add_option("--brep", sk_brep, "model .brep.json")->required();
    sk->add_option("--out", sk_out, "output directory");
    sk->add_flag("--include-cuts", sk_cuts, "also use cut_extrude_side faces");
    sk->add_flag("--project-grid", sk_grid, "project UV-grid samples as well");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            GenParams params;
            params.seed = resolve_seed(gen_seed_opt, gen_seed);
            params.n_models = gen_count;
            parse_steps_range(gen_steps, params.steps_min, params.steps_max);
            params.allow_cut = !gen_no_cuts;
            params.ks_cap = gen_ks_cap;
            if (gen_profile == "rect") params.profile = ProfileShape::Rect;
            else if (gen_profile == "polygon") params.profile = ProfileShape::ConvexPolygon;
            else throw ConfigError("unknown profile '" + gen_profile + "'");
            Manifest man = generate_dataset(params, gen_out);
            std::cout << "wrote " << man.entries.size() << " models to " << gen_out << "\n";
        } else if (val->parsed()) {
            BRep b = parse_brep_unchecked(read_file(val_input));
            ValidationReport rep = validate_topology(b);
            for (const Violation& v : rep.violations)
                std::cout << v.rule << ": " << v.entity << " " << v.id
                          << (v.detail.empty() ? "" : " (" + v.detail + ")") << "\n";
            if (rep.ok()) std::cout << "ok: " << b.n_faces() << " faces, " << b.n_edges()
                                    << " edges, " << b.n_coedges() << " coedges\n";
            if (!val_dump.empty() && rep.ok()) {
                FeatureMatrices fm = featurize(b, val_grid);
                write_file(val_dump, feature_dump_json(fm));
            }
            if (!rep.ok()) return 1;
        } else if (train->parsed()) {
            RunConfig cfg;
            if (train->get_option("--config")->count())
                cfg = load_config(train->get_option("--config")->as<std::string>());
            apply_config_overrides(cfg, train);
            if (!train->get_option("--seed")->count() && !train->get_option("--config")->count())
                if (const char* env = std::getenv("CADOPS_SEED"))
                    cfg.seed = std::strtoull(env, nullptr, 10);
            cfg.validate();

            TrainResult res = train_run(load_split(train_manifest, train_split), cfg);
            Provenance prov;
            prov.resolved_config = cfg.to_json();
            prov.hash_file("manifest", train_manifest);
            nn::save_params(res.params, train_out, prov);
            write_file(train_log, loss_log_csv(res.log));
            std::cout << "final losses: L_step=" << res.log.back().step
                      << " L_type=" << res.log.back().type << " L_total=" << res.log.back().total
                      << "\n";
        } else if (eval->parsed()) {
            EvalOptions opt{eval_split, eval_oracle};
            nn::ModelParams mp;
            nn::ModelParams* mpp = nullptr;
            if (!eval_oracle) {
                if (eval_ckpt.empty()) throw ConfigError("--checkpoint required unless --oracle");
                mp = nn::load_params(eval_ckpt);
                mpp = &mp;
            }
            EvalReport rep = evaluate_dataset(eval_manifest, mpp, opt);
            Provenance prov;
            prov.resolved_config = "{\"split\": " + json_str(eval_split) +
                                   ", \"oracle\": " + (eval_oracle ? "true" : "false") + "}";
            prov.hash_file("manifest", eval_manifest);
            if (!eval_ckpt.empty()) prov.hash_file("checkpoint", eval_ckpt);
            write_file(eval_json, report_json(rep, prov));
            write_file(eval_csv, report_csv(rep));
            std::cout << "type mAcc " << percent1(rep.type_macc) << "  type mIoU "
                      << percent1(rep.type_miou) << "  step mAcc " << percent1(rep.step_macc)
                      << "  R_C " << percent1(rep.r_c) << "  mS_C " << percent1(rep.ms_c) << "\n";
        } else if (pred->parsed()) {
            BRep b = load_brep(pred_input);
            nn::ModelParams mp = nn::load_params(pred_ckpt);
            Prediction p = predict(b, mp);
            Provenance prov;
            prov.resolved_config = nn::arch_config_json(mp.arch);
            prov.hash_file("input", pred_input);
            prov.hash_file("checkpoint", pred_ckpt);
            write_file(pred_out, prediction_json(p, prov));
            if (!pred_dump.empty())
                write_file(pred_dump, feature_dump_json(featurize(b, mp.arch.grid_resolution)));
            std::cout << "wrote " << pred_out << "\n";
        } else if (sk->parsed()) {
            BRep b = load_brep(sk_brep);
            Prediction p = parse_prediction(read_file(sk_pred));
            SketchOptions opt;
            opt.include_cuts = sk_cuts;
            opt.project_grid = sk_grid;
            std::vector<Sketch> sketches = recover_sketches(b, p, opt);
            std::error_code ec;
            fs::create_directories(sk_out, ec);
            std::vector<std::string> files;
            for (const Sketch& s : sketches) {
                if (s.chains.empty()) {
                    files.emplace_back();
                    continue;
                }
                std::string file = b.name + "_step" + std::to_string(s.step_id) + ".svg";
                write_file((fs::path(sk_out) / file).string(), export_svg(s));
                files.push_back(file);
            }
            Provenance prov;
            prov.resolved_config = "{\"include_cuts\": " + std::string(sk_cuts ? "true" : "false") +
                                   ", \"project_grid\": " + (sk_grid ? "true" : "false") + "}";
            prov.hash_file("prediction", sk_pred);
            prov.hash_file("brep", sk_brep);
            write_file((fs::path(sk_out) / "sketches.json").string(),
                       sketches_meta_json(b.name, sketches, files, prov));
            std::cout << "wrote " << sketches.size() << " sketches to " << sk_out << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
