// demorph: reference-free face demorphing pipeline driver.
//
// Subcommands: generate-morphs, train, demorph, evaluate. One JSON config
// (preset < file < flags) drives everything; every artifact echoes the
// config that produced it. Exit codes: 0 success, 1 runtime failure,
// 2 usage/configuration error.

#include "demorph/config.hpp"
#include "demorph/checkpoint.hpp"
#include "demorph/diffusion.hpp"
#include "demorph/evaluation.hpp"
#include "demorph/image_io.hpp"
#include "demorph/manifest.hpp"
#include "demorph/matcher.hpp"
#include "demorph/sampler.hpp"
#include "demorph/schedule.hpp"
#include "demorph/synthetic.hpp"
#include "demorph/train.hpp"
#include "demorph/unet.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace demorph;

namespace {

using Scalar = float;

std::string resolve_out_dir(const std::string& out_dir) {
    fs::path p(out_dir);
    if (p.is_relative()) {
        if (const char* ws = std::getenv("DEMORPH_WORKSPACE")) p = fs::path(ws) / p;
    }
    return p.string();
}

// Single-writer guard on the run directory.
class RunLock {
   public:
    explicit RunLock(const std::string& dir) : path_(fs::path(dir) / ".demorph.lock") {
        fs::create_directories(dir);
        if (fs::exists(path_))
            throw ConfigError("run directory is locked by another process (stale? remove " + path_.string() + ")");
        std::ofstream lock(path_);
        lock << "pid=" << ::getpid() << "\n";
        held_ = true;
    }
    ~RunLock() {
        if (held_) {
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

   private:
    fs::path path_;
    bool held_ = false;
};

std::vector<PoolEntry<Scalar>> load_external_pool(const std::string& pool_dir, int resolution, bool detect_faces,
                                                  int* discarded) {
    const fs::path dir(pool_dir);
    if (!fs::is_directory(dir)) throw ConfigError("pool path does not exist: " + pool_dir);
    const fs::path lm_path = dir / "landmarks.txt";
    if (!fs::exists(lm_path)) throw ConfigError("pool is missing landmarks.txt: " + pool_dir);
    std::ifstream in(lm_path);
    const auto records = read_landmark_file(in);
    std::vector<PoolEntry<Scalar>> pool;
    for (const auto& rec : records) {
        PoolEntry<Scalar> e;
        const fs::path img_path = fs::path(rec.image_path).is_absolute() ? fs::path(rec.image_path)
                                                                         : dir / rec.image_path;
        e.identity = img_path.stem().string();
        Tensor<Scalar> img = load_image<Scalar>(img_path.string());
        e.landmarks = rec.landmarks;
        double x0 = 0, y0 = 0, bw = img.width, bh = img.height;
        if (detect_faces) {
            const auto box = blob_face_detector(img);
            if (!box) {  // undetected faces are discarded and tallied
                if (discarded) ++*discarded;
                continue;
            }
            const auto cropped = crop_and_normalize<Scalar>(img, *box, nullptr, resolution);
            if (!cropped) {
                if (discarded) ++*discarded;
                continue;
            }
            x0 = box->x0;
            y0 = box->y0;
            bw = box->x1 - box->x0;
            bh = box->y1 - box->y0;
            img = *cropped;
        } else if (img.height != resolution || img.width != resolution) {
            img = resize_bilinear(img, resolution, resolution);
        }
        // remap landmarks into the output frame
        for (auto& p : e.landmarks.points)
            p = {(p.x() - x0) * resolution / bw, (p.y() - y0) * resolution / bh};
        for (auto& p : e.landmarks.points)
            p = {std::clamp(p.x(), 0.0, double(resolution)), std::clamp(p.y(), 0.0, double(resolution))};
        e.image = std::move(img);
        pool.push_back(std::move(e));
    }
    return pool;
}

int cmd_generate_morphs(const AppConfig& cfg) {
    const std::string out_dir = resolve_out_dir(cfg.out_dir);

    std::vector<PoolEntry<Scalar>> pool;
    int discarded = 0;
    if (cfg.data.pool == "synthetic") {
        if (cfg.data.pool_size < 2) throw ConfigError("data.pool_size must be >= 2");
        pool = make_synthetic_pool<Scalar>(cfg.data.pool_size, cfg.data.resolution, derive_seed(cfg.seed, 0xF00D));
    } else {
        pool = load_external_pool(cfg.data.pool, cfg.data.resolution, cfg.data.detect_faces, &discarded);
    }
    RunLock lock(out_dir);

    std::vector<std::string> ids;
    for (const auto& e : pool) ids.push_back(e.identity);
    auto [train_ids, test_ids] = identity_disjoint_split(ids, cfg.data.train_fraction, cfg.seed);
    std::set<std::string> train_set(train_ids.begin(), train_ids.end());
    std::vector<PoolEntry<Scalar>> train_pool, test_pool;
    for (auto& e : pool) (train_set.count(e.identity) ? train_pool : test_pool).push_back(e);

    if (cfg.data.n_train_morphs > 0 && train_pool.size() < 2)
        throw ConfigError("train identity pool too small for morph generation");
    if (cfg.data.n_test_morphs > 0 && test_pool.size() < 2)
        throw ConfigError("test identity pool too small for morph generation");

    const std::string ds_dir = (fs::path(out_dir) / "dataset").string();
    SynthesisStats train_stats, test_stats;
    std::vector<MorphRecord> records =
        synthesize_morphs(train_pool, cfg.data.n_train_morphs, derive_seed(cfg.seed, 1), ds_dir, "train",
                          cfg.data.alpha, "landmark-delaunay", &train_stats, cfg.data.allow_repeated_pairs);
    std::vector<MorphRecord> test_records =
        synthesize_morphs(test_pool, cfg.data.n_test_morphs, derive_seed(cfg.seed, 2), ds_dir, "test",
                          cfg.data.alpha, "landmark-delaunay", &test_stats, cfg.data.allow_repeated_pairs);
    records.insert(records.end(), test_records.begin(), test_records.end());
    records = filter_morphs_by_split(std::move(records), train_ids, test_ids);

    Manifest m;
    m.records = std::move(records);
    m.train_identities = train_ids;
    m.test_identities = test_ids;
    std::sort(m.train_identities.begin(), m.train_identities.end());
    std::sort(m.test_identities.begin(), m.test_identities.end());
    m.seed = cfg.seed;
    m.resolution = cfg.data.resolution;
    m.technique = "landmark-delaunay";
    m.config_echo = config_to_json(cfg);
    save_manifest(m, (fs::path(out_dir) / "manifest.jsonl").string());

    ordered_json summary;
    summary["pool_identities"] = pool.size();
    summary["train_identities"] = train_ids.size();
    summary["test_identities"] = test_ids.size();
    summary["train_morphs"] = train_stats.written;
    summary["test_morphs"] = test_stats.written;
    summary["repeated_pairs"] = train_stats.repeated_pairs + test_stats.repeated_pairs;
    summary["discarded_faces"] = discarded;
    summary["config"] = config_to_json(cfg);
    std::ofstream(fs::path(out_dir) / "generate_summary.json") << summary.dump(2) << '\n';

    std::cout << "generated " << train_stats.written << " train + " << test_stats.written << " test morphs from "
              << pool.size() << " identities (" << train_ids.size() << " train / " << test_ids.size()
              << " test), repeated pairs: " << summary["repeated_pairs"] << "\n"
              << "manifest: " << (fs::path(out_dir) / "manifest.jsonl").string() << "\n";
    return 0;
}

int cmd_train(const AppConfig& cfg, const std::string& manifest_flag, bool resume) {
    const std::string out_dir = resolve_out_dir(cfg.out_dir);
    const std::string manifest_path =
        manifest_flag.empty() ? (fs::path(out_dir) / "manifest.jsonl").string() : manifest_flag;
    if (!fs::exists(manifest_path)) throw ConfigError("manifest not found: " + manifest_path);
    const Manifest manifest = load_manifest(manifest_path);
    if (manifest.resolution != cfg.data.resolution)
        throw ConfigError("manifest resolution " + std::to_string(manifest.resolution) +
                          " does not match configured resolution " + std::to_string(cfg.data.resolution));
    RunLock lock(out_dir);

    const VarianceSchedule sched = cfg.schedule();
    {
        std::ofstream csv(fs::path(out_dir) / "schedule.csv");
        dump_schedule_csv(sched, csv);
    }
    auto net = build_denoiser<Scalar>(cfg.denoiser_config(), cfg.seed);
    std::cout << "denoiser: " << net->param_count() << " parameters, resolution " << cfg.data.resolution
              << ", schedule T=" << sched.T << "\n";
    AdamConfig ac;
    ac.lr = cfg.train.lr;
    Adam<Scalar> adam(net->params, ac);

    TrainConfig tc;
    tc.epochs = cfg.train.epochs;
    tc.batch_size = cfg.train.batch_size;
    tc.draws_per_record = cfg.train.draws_per_record;
    tc.lr = cfg.train.lr;
    tc.cosine_lr = cfg.train.cosine_lr;
    tc.checkpoint_every = cfg.train.checkpoint_every;
    tc.checkpoint_path = (fs::path(out_dir) / "checkpoint.ckpt").string();
    tc.log_csv_path = (fs::path(out_dir) / "train_log.csv").string();
    tc.ema = cfg.train.ema;
    tc.ema_decay = cfg.train.ema_decay;
    tc.verbose = true;

    int start_epoch = 0;
    if (resume) {
        if (!fs::exists(tc.checkpoint_path)) throw ConfigError("cannot resume: no checkpoint at " + tc.checkpoint_path);
        const CheckpointMeta meta = load_checkpoint(tc.checkpoint_path, *net, &adam);
        if (meta.schedule_hash != schedule_hash(sched))
            throw ConfigError("cannot resume: checkpoint was trained with a different variance schedule");
        start_epoch = meta.epochs_completed;
        std::cout << "resuming from epoch " << start_epoch << "\n";
    }

    CheckpointMeta base;
    base.config_echo = config_to_json(cfg);
    const auto stats = train_loop(*net, manifest, sched, tc, cfg.seed, &adam, start_epoch, &base);
    if (!stats.empty())
        std::cout << "trained to epoch " << stats.back().epoch << ", mean loss " << stats.back().mean_loss << "\n";
    std::cout << "checkpoint: " << tc.checkpoint_path << "\nlog: " << tc.log_csv_path << "\n";
    return 0;
}

DenoiserConfig model_config_from_header(const nlohmann::ordered_json& h) {
    DenoiserConfig d;
    const auto& m = h.at("model");
    d.in_channels = m.at("in_channels").get<int>();
    d.out_channels = m.at("out_channels").get<int>();
    d.base_width = m.at("base_width").get<int>();
    d.depth = m.at("depth").get<int>();
    d.time_embed_dim = m.at("time_embed_dim").get<int>();
    d.resolution = m.at("resolution").get<int>();
    d.channel_mult = m.at("channel_mult").get<std::vector<int>>();
    d.attention = m.at("attention").get<bool>();
    return d;
}

int cmd_demorph(const AppConfig& cfg, const std::string& checkpoint_flag, const std::string& manifest_flag,
                const std::string& morph_flag, const std::string& split_name_flag, bool use_ema) {
    const std::string out_dir = resolve_out_dir(cfg.out_dir);
    const std::string ckpt_path =
        checkpoint_flag.empty() ? (fs::path(out_dir) / "checkpoint.ckpt").string() : checkpoint_flag;
    if (!fs::exists(ckpt_path)) throw ConfigError("checkpoint not found: " + ckpt_path);

    const auto header = peek_checkpoint_header(ckpt_path);
    auto net = std::make_unique<UNet<Scalar>>(model_config_from_header(header));
    std::vector<nn::Arr<Scalar>> ema;
    if (use_ema) {
        if (!header.value("ema", false)) throw ConfigError("checkpoint has no EMA weights: " + ckpt_path);
        for (const auto& p : net->params) ema.push_back(nn::Arr<Scalar>::Zero(p.value->size()));
    }
    const CheckpointMeta meta =
        load_checkpoint(ckpt_path, *net, static_cast<Adam<Scalar>*>(nullptr), use_ema ? &ema : nullptr);
    if (use_ema)
        for (size_t i = 0; i < net->params.size(); ++i) *net->params[i].value = ema[i];

    const VarianceSchedule sched = cfg.schedule();
    if (schedule_hash(sched) != meta.schedule_hash)
        throw ConfigError("schedule mismatch: checkpoint was trained with a different variance schedule; "
                          "refusing to sample (check diffusion.T/beta_start/beta_end)");

    RunLock lock(out_dir);
    const SampleOptions opt = cfg.sample_options();
    const std::string outputs_dir = (fs::path(out_dir) / "outputs").string();
    const std::string index_path = (fs::path(out_dir) / "demorph_index.jsonl").string();

    if (!morph_flag.empty()) {
        MorphRecord r;
        r.morph_path = morph_flag;
        r.technique = "external";
        const DemorphBatchResult res = demorph_batch(*net, {r}, sched, opt, cfg.seed, outputs_dir, index_path);
        if (!res.failures.empty()) {
            std::cerr << "demorph failed: " << res.failures[0].error << "\n";
            return 1;
        }
        std::cout << "wrote " << res.outputs[0].out1_path << " and " << res.outputs[0].out2_path << "\n";
        return 0;
    }

    const std::string manifest_path =
        manifest_flag.empty() ? (fs::path(out_dir) / "manifest.jsonl").string() : manifest_flag;
    if (!fs::exists(manifest_path)) throw ConfigError("manifest not found: " + manifest_path);
    const Manifest manifest = load_manifest(manifest_path);
    const Split split = split_from_name(split_name_flag);
    std::vector<MorphRecord> records;
    for (const auto* r : records_in_split(manifest, split)) records.push_back(*r);

    const DemorphBatchResult res = demorph_batch(*net, records, sched, opt, cfg.seed, outputs_dir, index_path);
    std::cout << "demorphed " << res.outputs.size() << "/" << records.size() << " records, index: " << index_path
              << "\n";
    if (!res.failures.empty()) {
        std::cerr << res.failures.size() << " record(s) failed\n";
        return 1;
    }
    return 0;
}

int cmd_evaluate(const AppConfig& cfg, const std::string& index_flag, const std::string& report_dir_flag,
                 const std::string& gallery_flag) {
    const std::string out_dir = resolve_out_dir(cfg.out_dir);
    const std::string index_path =
        index_flag.empty() ? (fs::path(out_dir) / "demorph_index.jsonl").string() : index_flag;
    if (!fs::exists(index_path)) throw ConfigError("demorph index not found: " + index_path);

    const auto backend = make_backend(cfg.matcher.name, cfg.matcher.model_path);
    RunLock lock(out_dir);

    std::vector<EvalInput> inputs;
    std::vector<std::pair<std::string, Tensor<float>>> gallery_images;
    std::set<std::string> gallery_ids;
    std::ifstream in(index_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const ordered_json row = ordered_json::parse(line);
        EvalInput e;
        e.record = record_from_json(row);
        e.morph = load_image<float>(e.record.morph_path);
        e.o1 = load_image<float>(row.at("out1_path").get<std::string>());
        e.o2 = load_image<float>(row.at("out2_path").get<std::string>());
        e.i1 = load_image<float>(e.record.path_a);
        e.i2 = load_image<float>(e.record.path_b);
        if (!gallery_ids.count(e.record.id_a)) {
            gallery_images.emplace_back(e.record.id_a, e.i1);
            gallery_ids.insert(e.record.id_a);
        }
        if (!gallery_ids.count(e.record.id_b)) {
            gallery_images.emplace_back(e.record.id_b, e.i2);
            gallery_ids.insert(e.record.id_b);
        }
        inputs.push_back(std::move(e));
    }
    if (inputs.empty()) throw ConfigError("evaluate: empty result set in " + index_path);

    if (!gallery_flag.empty()) {
        // injectable gallery: directory of <identity>.png files
        gallery_images.clear();
        for (const auto& p : fs::directory_iterator(gallery_flag))
            if (p.path().extension() == ".png")
                gallery_images.emplace_back(p.path().stem().string(), load_image<float>(p.path().string()));
        if (gallery_images.empty()) throw ConfigError("evaluate: gallery directory has no png files: " + gallery_flag);
    }

    const std::vector<GalleryEntry> gallery = build_gallery(gallery_images, *backend);
    const EvaluationReport rep = build_report(inputs, gallery, *backend, cfg.eval_config());

    const std::string report_dir = report_dir_flag.empty() ? (fs::path(out_dir) / "eval").string() : report_dir_flag;
    fs::create_directories(report_dir);
    ordered_json doc;
    doc["run_config"] = config_to_json(cfg);
    doc["report"] = report_to_json(rep);
    std::ofstream(fs::path(report_dir) / "report.json") << doc.dump(2) << '\n';
    {
        std::ofstream s(fs::path(report_dir) / "scores.csv");
        write_score_csv(rep, s);
        std::ofstream p(fs::path(report_dir) / "per_record.csv");
        write_per_record_csv(rep, p);
    }

    std::cout << "evaluated " << inputs.size() << " records with matcher '" << rep.matcher_name << "'\n";
    for (const auto& [level, value] : rep.tmr)
        std::cout << "  TMR@" << level * 100 << "%FMR: " << value * 100 << "%\n";
    std::cout << "  RA@" << cfg.eval.ra_threshold << ": " << rep.ra * 100 << "%\n"
              << "  PSNR mean: " << rep.psnr_mean << " dB, SSIM mean: " << rep.ssim_mean << "\n"
              << "report: " << (fs::path(report_dir) / "report.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reference-free face demorphing: morph synthesis, coupled-diffusion training, demorphing, evaluation"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global options after the subcommand name

    std::string preset = "desk", config_path, out_dir_flag;
    std::optional<uint64_t> seed_flag;
    app.add_option("--preset", preset, "config preset: desk | paper-faithful");
    app.add_option("--config", config_path, "JSON config file (overrides preset)");
    app.add_option("--seed", seed_flag, "run seed (overrides config)");
    app.add_option("--out-dir", out_dir_flag, "run directory (overrides config; DEMORPH_WORKSPACE prefixes relative paths)");

    auto* gen = app.add_subcommand("generate-morphs", "synthesize a landmark-morph dataset and manifest");
    int n_train = -1, n_test = -1, pool_size = -1, resolution = -1;
    std::string pool;
    gen->add_option("--n-morphs", n_train, "train morph count");
    gen->add_option("--n-test-morphs", n_test, "test morph count");
    gen->add_option("--pool", pool, "'synthetic' or a pool directory with landmarks.txt");
    gen->add_option("--pool-size", pool_size, "synthetic pool identity count");
    gen->add_option("--resolution", resolution, "image resolution");

    auto* train = app.add_subcommand("train", "train the conditional coupled denoiser");
    std::string manifest_flag;
    int epochs_flag = -1;
    bool resume = false;
    train->add_option("--manifest", manifest_flag, "manifest path (default <out-dir>/manifest.jsonl)");
    train->add_option("--epochs", epochs_flag, "total epochs");
    train->add_flag("--resume", resume, "continue from <out-dir>/checkpoint.ckpt");

    auto* dem = app.add_subcommand("demorph", "reconstruct constituent images from morphs");
    std::string ckpt_flag, dem_manifest, morph_flag, split_flag = "test";
    int steps_flag = -1;
    bool ema_flag = false;
    dem->add_option("--checkpoint", ckpt_flag, "checkpoint path (default <out-dir>/checkpoint.ckpt)");
    dem->add_option("--manifest", dem_manifest, "manifest path for batch mode");
    dem->add_option("--morph", morph_flag, "single morph PNG (instead of batch mode)");
    dem->add_option("--split", split_flag, "manifest split to demorph: test | train");
    dem->add_option("--steps", steps_flag, "sampling steps");
    dem->add_flag("--ema", ema_flag, "sample with the checkpoint's EMA weights");

    auto* eval = app.add_subcommand("evaluate", "score demorphing outputs with the biometric protocol");
    std::string index_flag, report_dir_flag, gallery_flag;
    eval->add_option("--index", index_flag, "demorph index path (default <out-dir>/demorph_index.jsonl)");
    eval->add_option("--report-dir", report_dir_flag, "report output directory (default <out-dir>/eval)");
    eval->add_option("--gallery", gallery_flag, "directory of <identity>.png gallery images (default: split pool)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        AppConfig cfg = load_config(preset, config_path);
        if (seed_flag) cfg.seed = *seed_flag;
        if (!out_dir_flag.empty()) cfg.out_dir = out_dir_flag;
        if (gen->parsed()) {
            if (n_train >= 0) cfg.data.n_train_morphs = n_train;
            if (n_test >= 0) cfg.data.n_test_morphs = n_test;
            if (!pool.empty()) cfg.data.pool = pool;
            if (pool_size >= 0) cfg.data.pool_size = pool_size;
            if (resolution > 0) cfg.data.resolution = resolution;
            return cmd_generate_morphs(cfg);
        }
        if (train->parsed()) {
            if (epochs_flag >= 0) cfg.train.epochs = epochs_flag;
            return cmd_train(cfg, manifest_flag, resume);
        }
        if (dem->parsed()) {
            if (steps_flag > 0) cfg.sampler.steps = steps_flag;
            return cmd_demorph(cfg, ckpt_flag, dem_manifest, morph_flag, split_flag, ema_flag);
        }
        if (eval->parsed()) return cmd_evaluate(cfg, index_flag, report_dir_flag, gallery_flag);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
