#include <doctest.h>

#include <json.hpp>

#include "demorph/image_io.hpp"
#include "demorph/landmarks.hpp"
#include "demorph/synthetic.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// End-to-end exercises of the demorph binary. ctest points DEMORPH_BIN at the
// built tool; exit codes are part of the contract (0 ok, 1 runtime failure,
// 2 usage/config error).
namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* b = std::getenv("DEMORPH_BIN");
    return b ? b : "";
}

int run(const std::string& args, const std::string& log_path) {
    const std::string cmd = "\"" + bin() + "\" " + args + " >\"" + log_path + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& path) {
    std::ifstream in(path);
    int n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

struct Workspace {
    fs::path root;
    std::string config_path;
    std::string log;

    explicit Workspace(const std::string& name) {
        root = fs::temp_directory_path() / "demorph_tests" / ("cli_" + name);
        fs::remove_all(root);
        fs::create_directories(root);
        log = (root / "cmd.log").string();
        nlohmann::ordered_json j;
        j["seed"] = 11;
        j["out_dir"] = (root / "run").string();
        j["data"] = {{"resolution", 16}, {"pool", "synthetic"}, {"pool_size", 6},
                     {"n_train_morphs", 3}, {"n_test_morphs", 2}, {"train_fraction", 0.6}};
        j["model"] = {{"base_width", 8}, {"depth", 2}, {"time_embed_dim", 8}, {"attention", false}};
        j["diffusion"] = {{"T", 30}, {"beta_start", 1e-4}, {"beta_end", 0.02}};
        j["train"] = {{"epochs", 2}, {"lr", 1e-3}, {"batch_size", 2}, {"checkpoint_every", 1}};
        j["sampler"] = {{"steps", 4}};
        config_path = (root / "config.json").string();
        std::ofstream(config_path) << j.dump(2);
    }

    std::string run_dir() const { return (root / "run").string(); }
    std::string cfg() const { return " --config \"" + config_path + "\""; }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("full pipeline: generate, train, demorph, evaluate") {
    if (bin().empty()) {
        MESSAGE("DEMORPH_BIN not set; skipping CLI tests");
        return;
    }
    Workspace ws("pipeline");

    // generate-morphs
    REQUIRE(run("generate-morphs" + ws.cfg(), ws.log) == 0);
    const std::string manifest = ws.run_dir() + "/manifest.jsonl";
    REQUIRE(fs::exists(manifest));
    CHECK(count_lines(manifest) == 1 + 3 + 2);  // header + train + test records
    CHECK(fs::exists(ws.run_dir() + "/generate_summary.json"));

    SUBCASE("rerun reproduces the manifest byte for byte") {
        const std::string first = slurp(manifest);
        REQUIRE(run("generate-morphs" + ws.cfg(), ws.log) == 0);
        CHECK(slurp(manifest) == first);
    }

    // train
    REQUIRE(run("train" + ws.cfg(), ws.log) == 0);
    REQUIRE(fs::exists(ws.run_dir() + "/checkpoint.ckpt"));
    CHECK(count_lines(ws.run_dir() + "/train_log.csv") == 1 + 2);  // header + 2 epochs

    SUBCASE("ema flag refuses a checkpoint without ema weights") {
        CHECK(run("demorph --ema" + ws.cfg(), ws.log) == 2);
        CHECK(slurp(ws.log).find("EMA") != std::string::npos);
    }

    SUBCASE("resume continues the epoch numbering") {
        REQUIRE(run("train --epochs 4 --resume" + ws.cfg(), ws.log) == 0);
        std::ifstream log(ws.run_dir() + "/train_log.csv");
        std::string line;
        std::getline(log, line);
        std::vector<int> epochs;
        while (std::getline(log, line))
            if (!line.empty()) epochs.push_back(std::stoi(line.substr(0, line.find(','))));
        CHECK(epochs == std::vector<int>{1, 2, 3, 4});
    }

    // demorph the test split
    REQUIRE(run("demorph --split test" + ws.cfg(), ws.log) == 0);
    const std::string index = ws.run_dir() + "/demorph_index.jsonl";
    REQUIRE(fs::exists(index));
    CHECK(count_lines(index) == 2);

    // single-morph mode
    const auto mrow = nlohmann::ordered_json::parse(slurp(index).substr(0, slurp(index).find('\n')));
    const std::string one_morph = mrow.at("morph_path").get<std::string>();
    REQUIRE(run("demorph --morph \"" + one_morph + "\"" + ws.cfg(), ws.log) == 0);
    CHECK(count_lines(index) == 1);  // single mode rewrites the index with one row

    // restore batch index for evaluation
    REQUIRE(run("demorph --split test" + ws.cfg(), ws.log) == 0);

    // evaluate
    REQUIRE(run("evaluate" + ws.cfg(), ws.log) == 0);
    const std::string report_path = ws.run_dir() + "/eval/report.json";
    REQUIRE(fs::exists(report_path));
    const auto doc = nlohmann::ordered_json::parse(slurp(report_path));
    CHECK(doc.contains("run_config"));  // config echoed into the artifact
    const auto& rep = doc.at("report");
    CHECK(rep.at("per_record").size() == 2);
    const double ra = rep.at("restoration_accuracy").get<double>();
    CHECK(ra >= 0.0);
    CHECK(ra <= 1.0);
    CHECK(fs::exists(ws.run_dir() + "/eval/scores.csv"));
    CHECK(fs::exists(ws.run_dir() + "/eval/per_record.csv"));

    SUBCASE("report regeneration is byte-identical") {
        const std::string first = slurp(report_path);
        REQUIRE(run("evaluate" + ws.cfg(), ws.log) == 0);
        CHECK(slurp(report_path) == first);
    }
}

TEST_CASE("generate-morphs edge cases") {
    if (bin().empty()) return;
    SUBCASE("zero morphs is a valid empty manifest") {
        Workspace ws("gen_zero");
        REQUIRE(run("generate-morphs --n-morphs 0 --n-test-morphs 0" + ws.cfg(), ws.log) == 0);
        CHECK(count_lines(ws.run_dir() + "/manifest.jsonl") == 1);  // header only
    }
    SUBCASE("bad pool path: exit 2, no partial manifest") {
        Workspace ws("gen_bad_pool");
        CHECK(run("generate-morphs --pool /nonexistent/pool" + ws.cfg(), ws.log) == 2);
        CHECK(!fs::exists(ws.run_dir() + "/manifest.jsonl"));
    }
    SUBCASE("unknown preset is a usage error") {
        Workspace ws("gen_bad_preset");
        CHECK(run("generate-morphs --preset warehouse" + ws.cfg(), ws.log) == 2);
    }
}

TEST_CASE("train edge cases") {
    if (bin().empty()) return;
    SUBCASE("missing manifest: exit 2") {
        Workspace ws("train_missing");
        CHECK(run("train" + ws.cfg(), ws.log) == 2);
    }
    SUBCASE("manifest/config resolution mismatch: exit 2") {
        Workspace ws("train_res");
        REQUIRE(run("generate-morphs" + ws.cfg(), ws.log) == 0);
        // same manifest, config now claims resolution 32
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(ws.config_path));
        j["data"]["resolution"] = 32;
        std::ofstream(ws.config_path) << j.dump(2);
        CHECK(run("train" + ws.cfg(), ws.log) == 2);
    }
}

TEST_CASE("demorph edge cases") {
    if (bin().empty()) return;
    Workspace ws("dem_edge");
    REQUIRE(run("generate-morphs" + ws.cfg(), ws.log) == 0);
    REQUIRE(run("train" + ws.cfg(), ws.log) == 0);

    SUBCASE("missing checkpoint: exit 2") {
        CHECK(run("demorph --checkpoint /nonexistent.ckpt" + ws.cfg(), ws.log) == 2);
    }
    SUBCASE("schedule drift: refuse to run with exit 2") {
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(ws.config_path));
        j["diffusion"]["T"] = 31;
        const std::string drifted = (ws.root / "drifted.json").string();
        std::ofstream(drifted) << j.dump(2);
        CHECK(run("demorph --config \"" + drifted + "\"", ws.log) == 2);
        CHECK(slurp(ws.log).find("schedule") != std::string::npos);
    }
    SUBCASE("wrong-resolution morph: per-record failure, exit 1") {
        // an 8x8 image cannot feed a 16x16 model
        const std::string bad = (ws.root / "small.png").string();
        demorph::save_image(bad, demorph::make_synthetic_face<float>(1, 8).image);
        CHECK(run("demorph --morph \"" + bad + "\"" + ws.cfg(), ws.log) == 1);
    }
    SUBCASE("corrupted morph file: per-record failure, exit 1") {
        const std::string bad = (ws.root / "junk.png").string();
        std::ofstream(bad) << "not a png";
        CHECK(run("demorph --morph \"" + bad + "\"" + ws.cfg(), ws.log) == 1);
    }
}

TEST_CASE("evaluate edge cases") {
    if (bin().empty()) return;
    Workspace ws("eval_edge");
    SUBCASE("missing index: exit 2") {
        CHECK(run("evaluate" + ws.cfg(), ws.log) == 2);
    }
    SUBCASE("empty index: exit 2 with message") {
        fs::create_directories(ws.run_dir());
        std::ofstream(ws.run_dir() + "/demorph_index.jsonl");
        const int code = run("evaluate" + ws.cfg(), ws.log);
        fs::remove(ws.run_dir() + "/.demorph.lock");
        CHECK(code == 2);
        CHECK(slurp(ws.log).find("empty result set") != std::string::npos);
    }
    SUBCASE("external matcher with missing model file: startup error") {
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(ws.config_path));
        j["matcher"] = {{"name", "linear"}, {"model_path", "/nonexistent/model.json"}};
        std::ofstream(ws.config_path) << j.dump(2);
        fs::create_directories(ws.run_dir());
        std::ofstream(ws.run_dir() + "/demorph_index.jsonl") << "{}\n";
        CHECK(run("evaluate" + ws.cfg(), ws.log) == 2);
    }
}

TEST_CASE("external pool via landmark files") {
    if (bin().empty()) return;
    Workspace ws("ext_pool");
    // build a pool directory: PNGs + landmarks.txt
    const fs::path pool_dir = ws.root / "pool";
    fs::create_directories(pool_dir);
    std::vector<demorph::LandmarkRecord> lm_records;
    for (int i = 0; i < 5; ++i) {
        const auto face = demorph::make_synthetic_face<float>(4000 + i, 24);  // off-resolution on purpose
        const std::string name = "person" + std::to_string(i) + ".png";
        demorph::save_image((pool_dir / name).string(), face.image);
        lm_records.push_back({name, face.landmarks});
    }
    {
        std::ofstream lm(pool_dir / "landmarks.txt");
        demorph::write_landmark_file(lm_records, lm);
    }
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(ws.config_path));
    j["data"]["pool"] = pool_dir.string();
    j["data"]["n_train_morphs"] = 2;
    j["data"]["n_test_morphs"] = 1;
    std::ofstream(ws.config_path) << j.dump(2);

    REQUIRE(run("generate-morphs" + ws.cfg(), ws.log) == 0);
    const std::string manifest = ws.run_dir() + "/manifest.jsonl";
    REQUIRE(fs::exists(manifest));
    CHECK(count_lines(manifest) == 1 + 3);
    // identities come from file stems
    CHECK(slurp(manifest).find("person") != std::string::npos);

    SUBCASE("detect-and-crop path keeps a discard tally") {
        j["data"]["detect_faces"] = true;
        j["out_dir"] = (ws.root / "run2").string();
        std::ofstream(ws.config_path) << j.dump(2);
        REQUIRE(run("generate-morphs" + ws.cfg(), ws.log) == 0);
        const auto summary = nlohmann::ordered_json::parse(slurp((ws.root / "run2" / "generate_summary.json").string()));
        CHECK(summary.at("discarded_faces").get<int>() >= 0);
        CHECK(fs::exists(ws.root / "run2" / "manifest.jsonl"));
    }
}

TEST_CASE("workspace env var prefixes relative out dirs") {
    if (bin().empty()) return;
    Workspace ws("envvar");
    // rewrite config with a relative out_dir
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(slurp(ws.config_path));
    j["out_dir"] = "rel_run";
    j["data"]["n_train_morphs"] = 1;
    j["data"]["n_test_morphs"] = 0;
    std::ofstream(ws.config_path) << j.dump(2);
    const std::string cmd = "DEMORPH_WORKSPACE=\"" + ws.root.string() + "\" \"" + bin() +
                            "\" generate-morphs --config \"" + ws.config_path + "\" >\"" + ws.log + "\" 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    CHECK(fs::exists(ws.root / "rel_run" / "manifest.jsonl"));
}

TEST_CASE("run directory lock") {
    if (bin().empty()) return;
    Workspace ws("lock");
    fs::create_directories(ws.run_dir());
    std::ofstream(ws.run_dir() + "/.demorph.lock") << "pid=0\n";
    CHECK(run("generate-morphs" + ws.cfg(), ws.log) == 2);
    CHECK(slurp(ws.log).find("lock") != std::string::npos);
}

}  // TEST_SUITE
