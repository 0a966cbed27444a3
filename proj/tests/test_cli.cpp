#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cadops/generator.hpp"
#include "cadops/metrics.hpp"
#include "cadops/train.hpp"
#include "support.hpp"

using namespace cadops;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(CADOPS_BIN) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp_dir(const fs::path& dir) {
    std::string all;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        if (fs::is_regular_file(f)) all += f.filename().string() + "\n" + read_file(f.string());
    return all;
}

}  // namespace

TEST_CASE("config loading") {
    fs::path p = fs::temp_directory_path() / "cadops_cfg.json";
    SECTION("empty config keeps the defaults") {
        write_file(p.string(), "{}");
        RunConfig cfg = load_config(p.string());
        CHECK(cfg.epochs == 200);
        CHECK(cfg.batch_size == 100);
        CHECK(cfg.lr == 1e-3);
        CHECK(cfg.beta1 == 0.9);
        CHECK(cfg.beta2 == 0.99);
        CHECK(cfg.grid_resolution == 5);
        CHECK(cfg.n_layers == 2);
        CHECK(cfg.d_emb == 64);
        CHECK(cfg.aggregation == "avg");
        CHECK(cfg.k_s == 0);
    }
    SECTION("values read from the file") {
        write_file(p.string(), "{\"lr\": 0.01, \"epochs\": 3}");
        RunConfig cfg = load_config(p.string());
        CHECK(cfg.lr == 0.01);
        CHECK(cfg.epochs == 3);
    }
    SECTION("misspelled keys are named in the error") {
        write_file(p.string(), "{\"learning_rate\": 0.01}");
        try {
            load_config(p.string());
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
        }
    }
    SECTION("invalid values are rejected") {
        write_file(p.string(), "{\"epochs\": -1}");
        CHECK_THROWS_AS(load_config(p.string()), ConfigError);
        write_file(p.string(), "{\"dropout\": 0.5}");
        CHECK_THROWS_AS(load_config(p.string()), ConfigError);
        write_file(p.string(), "{\"aggregation\": \"median\"}");
        CHECK_THROWS_AS(load_config(p.string()), ConfigError);
    }
    fs::remove(p);
}

TEST_CASE("gen twice produces identical directory contents") {
    fs::path d1 = fs::temp_directory_path() / "cadops_cli_gen1";
    fs::path d2 = fs::temp_directory_path() / "cadops_cli_gen2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    REQUIRE(run("gen --count 10 --seed 7 --steps 1..3 --out " + d1.string()) == 0);
    REQUIRE(run("gen --count 10 --seed 7 --steps 1..3 --out " + d2.string()) == 0);
    CHECK(slurp_dir(d1) == slurp_dir(d2));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("validate exits 0 on a valid model and 1 on a broken one") {
    fs::path dir = fs::temp_directory_path() / "cadops_cli_val";
    fs::remove_all(dir);
    fs::create_directories(dir);
    BRep box = testsupport::make_box({0, 0, 0}, 1, 1, 1);
    save_brep(box, (dir / "ok.brep.json").string());
    CHECK(run("validate --input " + (dir / "ok.brep.json").string()) == 0);

    box.coedges[3].mate = 3;
    save_brep(box, (dir / "broken.brep.json").string());
    CHECK(run("validate --input " + (dir / "broken.brep.json").string()) == 1);
    CHECK(run("validate") == 2);  // missing required flag
    CHECK(run("frobnicate") == 2);

    SECTION("feature dump") {
        fs::path f = dir / "features.json";
        CHECK(run("validate --input " + (dir / "ok.brep.json").string() + " --dump-features " +
                  f.string()) == 0);
        std::string text = read_file(f.string());
        CHECK(text.find("\"d_f\": 157") != std::string::npos);
        CHECK(text.find("\"F\"") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("single-model overfit drives the loss below 0.05") {
    std::vector<BRep> data;
    GenParams gp;
    gp.steps_min = gp.steps_max = 2;
    data.push_back(generate_model(31, gp));

    RunConfig cfg;
    cfg.seed = 7;
    cfg.epochs = 300;
    cfg.batch_size = 1;
    cfg.grid_resolution = 3;
    cfg.d_emb = 32;
    cfg.hidden = 32;
    cfg.lr = 3e-3;
    TrainResult res = train_run(data, cfg);
    CHECK(res.log.back().total < 0.05);

    SECTION("smoothed loss decreases across 50-epoch windows") {
        std::vector<double> window_means;
        for (std::size_t start = 0; start + 50 <= res.log.size(); start += 50) {
            double s = 0;
            for (std::size_t i = start; i < start + 50; ++i) s += res.log[i].total;
            window_means.push_back(s / 50.0);
        }
        for (std::size_t w = 1; w < window_means.size(); ++w)
            CHECK(window_means[w] < window_means[w - 1]);
    }

    SECTION("loss log csv has the expected columns") {
        std::string csv = loss_log_csv(res.log);
        CHECK(csv.rfind("epoch,L_step,L_type,L_total\n", 0) == 0);
    }
}

TEST_CASE("train, eval, predict and sketch round through the CLI") {
    fs::path dir = fs::temp_directory_path() / "cadops_cli_pipe";
    fs::remove_all(dir);
    REQUIRE(run("gen --count 6 --seed 11 --steps 1..2 --out " + dir.string()) == 0);

    std::string manifest = (dir / "manifest.json").string();
    std::string ckpt = (dir / "model.ckpt.json").string();
    std::string log = (dir / "loss.csv").string();
    REQUIRE(run("train --manifest " + manifest + " --split all --epochs 30 --batch-size 3 "
                "--grid-res 3 --d-emb 24 --hidden 24 --seed 3 --out " + ckpt + " --log " + log) == 0);
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(log));

    // equal config and inputs reproduce the checkpoint byte for byte
    std::string ckpt2 = (dir / "model2.ckpt.json").string();
    REQUIRE(run("train --manifest " + manifest + " --split all --epochs 30 --batch-size 3 "
                "--grid-res 3 --d-emb 24 --hidden 24 --seed 3 --out " + ckpt2 + " --log " + log) == 0);
    CHECK(read_file(ckpt) == read_file(ckpt2));

    REQUIRE(run("eval --manifest " + manifest + " --checkpoint " + ckpt + " --split all "
                "--out-json " + (dir / "report.json").string() + " --out-csv " +
                (dir / "report.csv").string()) == 0);
    CHECK(read_file((dir / "report.json").string()).find("\"metrics\"") != std::string::npos);

    REQUIRE(run("eval --manifest " + manifest + " --oracle --split all --out-json " +
                (dir / "oracle.json").string() + " --out-csv " + (dir / "oracle.csv").string()) == 0);
    CHECK(read_file((dir / "oracle.json").string()).find("\"type_macc\": \"100.0\"") !=
          std::string::npos);

    std::string model0 = (dir / "model_000000.brep.json").string();
    REQUIRE(run("predict --input " + model0 + " --checkpoint " + ckpt + " --out " +
                (dir / "pred.json").string()) == 0);
    CHECK(fs::exists(dir / "pred.json"));

    REQUIRE(run("sketch --input " + (dir / "pred.json").string() + " --brep " + model0 +
                " --out " + (dir / "sketches").string()) == 0);
    CHECK(fs::exists(dir / "sketches" / "sketches.json"));
    fs::remove_all(dir);
}

TEST_CASE("environment seed is picked up when no flag is given") {
    fs::path d1 = fs::temp_directory_path() / "cadops_env1";
    fs::path d2 = fs::temp_directory_path() / "cadops_env2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    setenv("CADOPS_SEED", "99", 1);
    REQUIRE(run("gen --count 3 --out " + d1.string()) == 0);
    unsetenv("CADOPS_SEED");
    REQUIRE(run("gen --count 3 --seed 99 --out " + d2.string()) == 0);
    CHECK(slurp_dir(d1) == slurp_dir(d2));
    fs::remove_all(d1);
    fs::remove_all(d2);
}
