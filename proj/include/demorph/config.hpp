#pragma once

#include "demorph/evaluation.hpp"
#include "demorph/matcher.hpp"
#include "demorph/sampler.hpp"
#include "demorph/schedule.hpp"
#include "demorph/unet.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace demorph {

// One structured config drives every command. Sections: data, model,
// diffusion, train, sampler, matcher, eval. File values override the preset,
// command-line flags override the file.
struct AppConfig {
    uint64_t seed = 7;
    std::string out_dir = "runs/default";

    struct {
        int resolution = 64;
        std::string pool = "synthetic";  // or a directory with images + landmarks.txt
        int pool_size = 12;              // synthetic pool identities
        int n_train_morphs = 16;
        int n_test_morphs = 6;
        double train_fraction = 0.6;
        double alpha = 0.5;
        bool allow_repeated_pairs = true;
        bool detect_faces = false;  // run the toy detector + crop on external pools
    } data;

    struct {
        int base_width = 32;
        int depth = 3;
        int time_embed_dim = 64;
        std::vector<int> channel_mult;  // empty = default per-depth multipliers
        bool attention = true;
    } model;

    struct {
        int T = 1000;
        double beta_start = 1e-4;
        double beta_end = 0.02;
        bool clamp_x0 = true;
    } diffusion;

    struct {
        int epochs = 300;
        double lr = 1e-3;
        bool cosine_lr = false;
        int batch_size = 4;
        int draws_per_record = 1;
        int checkpoint_every = 50;
        bool ema = false;
        double ema_decay = 0.999;
    } train;

    struct {
        int steps = 100;
        std::string variance = "beta_tilde";  // or "beta"
    } sampler;

    struct {
        std::string name = "toy";
        std::string model_path;
        int dimension = 64;
    } matcher;

    struct {
        double ra_threshold = 0.4;
        double theta = 0.4;
        double epsilon = 0.4;
        std::vector<double> fmr_levels = {0.01, 0.05, 0.10};
    } eval;

    DenoiserConfig denoiser_config() const {
        DenoiserConfig d;
        d.base_width = model.base_width;
        d.depth = model.depth;
        d.time_embed_dim = model.time_embed_dim;
        d.resolution = data.resolution;
        d.channel_mult = model.channel_mult;
        d.attention = model.attention;
        return d;
    }

    VarianceSchedule schedule() const { return linear_schedule(diffusion.T, diffusion.beta_start, diffusion.beta_end); }

    SampleOptions sample_options() const {
        SampleOptions o;
        o.steps = sampler.steps;
        o.clamp_x0 = diffusion.clamp_x0;
        o.variance = sampler.variance == "beta" ? ReverseVariance::beta : ReverseVariance::beta_tilde;
        return o;
    }

    EvalConfig eval_config() const {
        EvalConfig e;
        e.fmr_levels = eval.fmr_levels;
        e.ra_threshold = eval.ra_threshold;
        e.theta = eval.theta;
        e.epsilon = eval.epsilon;
        return e;
    }
};

inline ordered_json config_to_json(const AppConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["data"] = {{"resolution", c.data.resolution},
                 {"pool", c.data.pool},
                 {"pool_size", c.data.pool_size},
                 {"n_train_morphs", c.data.n_train_morphs},
                 {"n_test_morphs", c.data.n_test_morphs},
                 {"train_fraction", c.data.train_fraction},
                 {"alpha", c.data.alpha},
                 {"allow_repeated_pairs", c.data.allow_repeated_pairs},
                 {"detect_faces", c.data.detect_faces}};
    j["model"] = {{"base_width", c.model.base_width},
                  {"depth", c.model.depth},
                  {"time_embed_dim", c.model.time_embed_dim},
                  {"channel_mult", c.model.channel_mult},
                  {"attention", c.model.attention}};
    j["diffusion"] = {{"T", c.diffusion.T},
                      {"beta_start", c.diffusion.beta_start},
                      {"beta_end", c.diffusion.beta_end},
                      {"clamp_x0", c.diffusion.clamp_x0}};
    j["train"] = {{"epochs", c.train.epochs},
                  {"lr", c.train.lr},
                  {"cosine_lr", c.train.cosine_lr},
                  {"batch_size", c.train.batch_size},
                  {"draws_per_record", c.train.draws_per_record},
                  {"checkpoint_every", c.train.checkpoint_every},
                  {"ema", c.train.ema},
                  {"ema_decay", c.train.ema_decay}};
    j["sampler"] = {{"steps", c.sampler.steps}, {"variance", c.sampler.variance}};
    j["matcher"] = {{"name", c.matcher.name}, {"model_path", c.matcher.model_path}, {"dimension", c.matcher.dimension}};
    j["eval"] = {{"ra_threshold", c.eval.ra_threshold},
                 {"theta", c.eval.theta},
                 {"epsilon", c.eval.epsilon},
                 {"fmr_levels", c.eval.fmr_levels}};
    return j;
}

// Applies fields present in j on top of c; unknown sections/keys are errors.
inline void config_merge_json(AppConfig& c, const ordered_json& j) {
    static const std::set<std::string> known = {"seed", "out_dir", "data", "model", "diffusion",
                                                "train", "sampler", "matcher", "eval"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("config: unknown top-level key '" + key + "'");
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("data")) {
        const auto& d = j["data"];
        if (d.contains("resolution")) c.data.resolution = d["resolution"].get<int>();
        if (d.contains("pool")) c.data.pool = d["pool"].get<std::string>();
        if (d.contains("pool_size")) c.data.pool_size = d["pool_size"].get<int>();
        if (d.contains("n_train_morphs")) c.data.n_train_morphs = d["n_train_morphs"].get<int>();
        if (d.contains("n_test_morphs")) c.data.n_test_morphs = d["n_test_morphs"].get<int>();
        if (d.contains("train_fraction")) c.data.train_fraction = d["train_fraction"].get<double>();
        if (d.contains("alpha")) c.data.alpha = d["alpha"].get<double>();
        if (d.contains("allow_repeated_pairs")) c.data.allow_repeated_pairs = d["allow_repeated_pairs"].get<bool>();
        if (d.contains("detect_faces")) c.data.detect_faces = d["detect_faces"].get<bool>();
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        if (m.contains("base_width")) c.model.base_width = m["base_width"].get<int>();
        if (m.contains("depth")) c.model.depth = m["depth"].get<int>();
        if (m.contains("time_embed_dim")) c.model.time_embed_dim = m["time_embed_dim"].get<int>();
        if (m.contains("channel_mult")) c.model.channel_mult = m["channel_mult"].get<std::vector<int>>();
        if (m.contains("attention")) c.model.attention = m["attention"].get<bool>();
    }
    if (j.contains("diffusion")) {
        const auto& d = j["diffusion"];
        if (d.contains("T")) c.diffusion.T = d["T"].get<int>();
        if (d.contains("beta_start")) c.diffusion.beta_start = d["beta_start"].get<double>();
        if (d.contains("beta_end")) c.diffusion.beta_end = d["beta_end"].get<double>();
        if (d.contains("clamp_x0")) c.diffusion.clamp_x0 = d["clamp_x0"].get<bool>();
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        if (t.contains("epochs")) c.train.epochs = t["epochs"].get<int>();
        if (t.contains("lr")) c.train.lr = t["lr"].get<double>();
        if (t.contains("batch_size")) c.train.batch_size = t["batch_size"].get<int>();
        if (t.contains("draws_per_record")) c.train.draws_per_record = t["draws_per_record"].get<int>();
        if (t.contains("cosine_lr")) c.train.cosine_lr = t["cosine_lr"].get<bool>();
        if (t.contains("checkpoint_every")) c.train.checkpoint_every = t["checkpoint_every"].get<int>();
        if (t.contains("ema")) c.train.ema = t["ema"].get<bool>();
        if (t.contains("ema_decay")) c.train.ema_decay = t["ema_decay"].get<double>();
    }
    if (j.contains("sampler")) {
        const auto& s = j["sampler"];
        if (s.contains("steps")) c.sampler.steps = s["steps"].get<int>();
        if (s.contains("variance")) c.sampler.variance = s["variance"].get<std::string>();
    }
    if (j.contains("matcher")) {
        const auto& m = j["matcher"];
        if (m.contains("name")) c.matcher.name = m["name"].get<std::string>();
        if (m.contains("model_path")) c.matcher.model_path = m["model_path"].get<std::string>();
        if (m.contains("dimension")) c.matcher.dimension = m["dimension"].get<int>();
    }
    if (j.contains("eval")) {
        const auto& e = j["eval"];
        if (e.contains("ra_threshold")) c.eval.ra_threshold = e["ra_threshold"].get<double>();
        if (e.contains("theta")) c.eval.theta = e["theta"].get<double>();
        if (e.contains("epsilon")) c.eval.epsilon = e["epsilon"].get<double>();
        if (e.contains("fmr_levels")) c.eval.fmr_levels = e["fmr_levels"].get<std::vector<double>>();
    }
}

// desk: runs end to end on a laptop-class CPU with the synthetic pool.
// paper-faithful: the published constants (256x256, T=1000, 100 sampling
// steps, lr 1e-3, 300 epochs, 15000 training morphs); needs real data and
// serious compute.
inline AppConfig config_preset(const std::string& name) {
    AppConfig c;  // defaults are the desk preset
    if (name == "desk") return c;
    if (name == "paper-faithful") {
        c.data.resolution = 256;
        c.data.pool_size = 500;
        c.data.n_train_morphs = 15000;
        c.data.n_test_morphs = 1000;
        c.model.base_width = 64;
        c.model.depth = 4;
        c.model.channel_mult = {1, 2, 2, 4};
        c.model.time_embed_dim = 128;
        c.train.epochs = 300;
        c.train.batch_size = 8;
        c.train.checkpoint_every = 10;
        return c;
    }
    throw ConfigError("unknown preset: " + name + " (expected 'desk' or 'paper-faithful')");
}

inline AppConfig load_config(const std::string& preset, const std::string& config_path) {
    AppConfig c = config_preset(preset.empty() ? "desk" : preset);
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("config file not found: " + config_path);
        ordered_json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config file parse error: ") + e.what());
        }
        config_merge_json(c, j);
    }
    return c;
}

}  // namespace demorph
