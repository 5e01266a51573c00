#include "demorph/train.hpp"

#include "demorph/manifest.hpp"
#include "demorph/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace demorph;
namespace fs = std::filesystem;

namespace {

DenoiserConfig train_cfg(int resolution = 16) {
    DenoiserConfig c;
    c.base_width = 8;
    c.depth = 2;
    c.time_embed_dim = 8;
    c.resolution = resolution;
    c.attention = false;
    return c;
}

Manifest tiny_manifest(const std::string& dir, int n_morphs, int resolution = 16) {
    const auto pool = make_synthetic_pool<float>(4, resolution, 17);
    return build_training_set(pool, n_morphs, 23, dir);
}

std::vector<nn::Arr<float>> snapshot(const UNet<float>& net) {
    std::vector<nn::Arr<float>> s;
    for (const auto& p : net.params) s.push_back(*p.value);
    return s;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("epochs=0: no parameter change, empty log") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "train0").string();
    fs::remove_all(dir);
    const Manifest m = tiny_manifest(dir, 2);
    const VarianceSchedule sched = linear_schedule(50, 1e-4, 0.02);
    auto net = build_denoiser<float>(train_cfg(), 1);
    const auto before = snapshot(*net);
    TrainConfig tc;
    tc.epochs = 0;
    const auto stats = train_loop(*net, m, sched, tc, 5);
    CHECK(stats.empty());
    const auto after = snapshot(*net);
    for (size_t i = 0; i < before.size(); ++i) CHECK((before[i] == after[i]).all());
}

TEST_CASE("empty train split is a contract error") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "train_empty").string();
    fs::remove_all(dir);
    Manifest m = tiny_manifest(dir, 2);
    for (auto& r : m.records) r.split = Split::test;
    const VarianceSchedule sched = linear_schedule(50, 1e-4, 0.02);
    auto net = build_denoiser<float>(train_cfg(), 1);
    TrainConfig tc;
    tc.epochs = 1;
    CHECK_THROWS_AS(train_loop(*net, m, sched, tc, 5), std::invalid_argument);
}

TEST_CASE("same seed, same data: identical loss curve") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "train_det").string();
    fs::remove_all(dir);
    const Manifest m = tiny_manifest(dir, 3);
    const VarianceSchedule sched = linear_schedule(50, 1e-4, 0.02);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 2;

    auto net1 = build_denoiser<float>(train_cfg(), 2);
    const auto s1 = train_loop(*net1, m, sched, tc, 99);
    auto net2 = build_denoiser<float>(train_cfg(), 2);
    const auto s2 = train_loop(*net2, m, sched, tc, 99);
    REQUIRE(s1.size() == s2.size());
    for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].mean_loss == s2[i].mean_loss);

    auto net3 = build_denoiser<float>(train_cfg(), 2);
    const auto s3 = train_loop(*net3, m, sched, tc, 100);
    CHECK(s3[0].mean_loss != s1[0].mean_loss);
}

TEST_CASE("loss decreases on a tiny overfit run") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "train_down").string();
    fs::remove_all(dir);
    const Manifest m = tiny_manifest(dir, 2);
    const VarianceSchedule sched = linear_schedule(50, 1e-4, 0.02);
    auto net = build_denoiser<float>(train_cfg(), 3);
    TrainConfig tc;
    tc.epochs = 40;
    tc.batch_size = 2;
    const auto stats = train_loop(*net, m, sched, tc, 7);
    REQUIRE(stats.size() == 40);
    double late = 0, early = 0;
    for (int i = 0; i < 5; ++i) {
        early += stats[i].mean_loss;
        late += stats[stats.size() - 1 - i].mean_loss;
    }
    CHECK(late < early);
}

TEST_CASE("checkpoint resume: log continues and replays the uninterrupted run") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "train_resume").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    const Manifest m = tiny_manifest(dir + "/data", 3);
    const VarianceSchedule sched = linear_schedule(50, 1e-4, 0.02);

    TrainConfig tc;
    tc.epochs = 6;
    tc.batch_size = 2;
    tc.checkpoint_path = dir + "/ckpt.bin";
    tc.log_csv_path = dir + "/log.csv";

    // uninterrupted reference
    auto ref = build_denoiser<float>(train_cfg(), 4);
    AdamConfig ac;
    Adam<float> ref_opt(ref->params, ac);
    TrainConfig tc_ref = tc;
    tc_ref.checkpoint_path = dir + "/ref.bin";
    tc_ref.log_csv_path.clear();
    train_loop(*ref, m, sched, tc_ref, 55, &ref_opt);

    // first leg: epochs 1..3
    auto net = build_denoiser<float>(train_cfg(), 4);
    Adam<float> opt1(net->params, ac);
    TrainConfig tc1 = tc;
    tc1.epochs = 3;
    train_loop(*net, m, sched, tc1, 55, &opt1);

    // second leg: fresh process state, resume from the checkpoint
    auto net2 = build_denoiser<float>(train_cfg(), 999);  // different init, will be overwritten
    Adam<float> opt2(net2->params, ac);
    const CheckpointMeta meta = load_checkpoint(tc.checkpoint_path, *net2, &opt2);
    CHECK(meta.epochs_completed == 3);
    CHECK(meta.schedule_hash == schedule_hash(sched));
    const auto stats2 = train_loop(*net2, m, sched, tc, 55, &opt2, meta.epochs_completed);
    REQUIRE(stats2.size() == 3);
    CHECK(stats2.front().epoch == 4);  // log continues after the checkpointed epoch
    CHECK(stats2.back().epoch == 6);

    // resumed run matches the uninterrupted one bit for bit
    for (size_t i = 0; i < ref->params.size(); ++i) CHECK((*ref->params[i].value == *net2->params[i].value).all());

    // csv log: header + epochs 1..3 then 4..6
    std::ifstream log(tc.log_csv_path);
    std::string line;
    std::getline(log, line);
    CHECK(line == "epoch,mean_loss,wall_time");
    std::vector<int> epochs;
    while (std::getline(log, line))
        if (!line.empty()) epochs.push_back(std::stoi(line.substr(0, line.find(','))));
    CHECK(epochs == std::vector<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("checkpoint round trip preserves parameters and metadata") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "ckpt_rt").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto net = build_denoiser<float>(train_cfg(), 10);
    CheckpointMeta meta;
    meta.seed = 1234;
    meta.schedule_hash = 0xfeed;
    meta.epochs_completed = 17;
    meta.config_echo = {{"train", {{"epochs", 17}}}};
    save_checkpoint(dir + "/c.bin", *net, meta);

    auto net2 = build_denoiser<float>(train_cfg(), 11);
    const CheckpointMeta back = load_checkpoint(dir + "/c.bin", *net2);
    CHECK(back.seed == 1234);
    CHECK(back.schedule_hash == 0xfeed);
    CHECK(back.epochs_completed == 17);
    CHECK(back.config_echo["train"]["epochs"] == 17);
    for (size_t i = 0; i < net->params.size(); ++i) CHECK((*net->params[i].value == *net2->params[i].value).all());

    SUBCASE("mismatched architecture is rejected") {
        DenoiserConfig wider = train_cfg();
        wider.base_width = 16;
        auto other = build_denoiser<float>(wider, 1);
        CHECK_THROWS(load_checkpoint(dir + "/c.bin", *other));
    }
    SUBCASE("header peek") {
        const auto h = peek_checkpoint_header(dir + "/c.bin");
        CHECK(h.at("model").at("resolution").get<int>() == 16);
        CHECK(h.at("scalar").get<std::string>() == "f32");
    }
}

TEST_CASE("draws_per_record multiplies optimization passes per epoch") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "train_draws").string();
    fs::remove_all(dir);
    const Manifest m = tiny_manifest(dir, 2);
    const VarianceSchedule sched = linear_schedule(50, 1e-4, 0.02);
    auto net = build_denoiser<float>(train_cfg(), 5);
    AdamConfig ac;
    Adam<float> opt(net->params, ac);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 2;
    tc.draws_per_record = 3;
    train_loop(*net, m, sched, tc, 9, &opt);
    // 2 records x 3 draws / batch 2 = 3 steps per epoch, 2 epochs
    CHECK(opt.step_count() == 6);
    CHECK_THROWS_AS(
        [&] {
            TrainConfig bad = tc;
            bad.draws_per_record = 0;
            return train_loop(*net, m, sched, bad, 9);
        }(),
        std::invalid_argument);
}

TEST_CASE("cosine lr decay reaches the floor by the last epoch") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "train_cos").string();
    fs::remove_all(dir);
    const Manifest m = tiny_manifest(dir, 2);
    const VarianceSchedule sched = linear_schedule(50, 1e-4, 0.02);
    auto net = build_denoiser<float>(train_cfg(), 6);
    AdamConfig ac;
    ac.lr = 1e-3;
    Adam<float> opt(net->params, ac);
    TrainConfig tc;
    tc.epochs = 4;
    tc.cosine_lr = true;
    tc.lr = 1e-3;
    train_loop(*net, m, sched, tc, 9, &opt);
    CHECK(opt.config().lr == doctest::Approx(0.05 * 1e-3).epsilon(1e-9));
}

TEST_CASE("ema weights track training") {
    const std::string dir = (fs::temp_directory_path() / "demorph_tests" / "train_ema").string();
    fs::remove_all(dir);
    const Manifest m = tiny_manifest(dir, 2);
    const VarianceSchedule sched = linear_schedule(50, 1e-4, 0.02);
    auto net = build_denoiser<float>(train_cfg(), 12);
    const auto init = snapshot(*net);
    TrainConfig tc;
    tc.epochs = 2;
    tc.ema = true;
    tc.ema_decay = 0.5;
    std::vector<nn::Arr<float>> ema;
    for (const auto& p : net->params) ema.push_back(*p.value);
    AdamConfig ac;
    Adam<float> opt(net->params, ac);
    train_loop(*net, m, sched, tc, 5, &opt, 0, nullptr, &ema);
    bool moved = false, differs_from_current = false;
    for (size_t i = 0; i < ema.size(); ++i) {
        if ((ema[i] != init[i]).any()) moved = true;
        if ((ema[i] != *net->params[i].value).any()) differs_from_current = true;
    }
    CHECK(moved);
    CHECK(differs_from_current);
}

}  // TEST_SUITE
