#pragma once

#include "demorph/adam.hpp"
#include "demorph/checkpoint.hpp"
#include "demorph/diffusion.hpp"
#include "demorph/image_io.hpp"
#include "demorph/manifest.hpp"
#include "demorph/schedule.hpp"
#include "demorph/unet.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace demorph {

struct TrainConfig {
    int epochs = 300;            // total target; resume continues toward it
    int batch_size = 4;
    double lr = 1e-3;            // initial learning rate
    bool cosine_lr = false;      // cosine decay of lr to 5% over the epoch budget
    int draws_per_record = 1;    // independent (t, noise) draws per record per epoch
    int checkpoint_every = 50;   // epochs; 0 = only at the end
    std::string checkpoint_path;  // empty = no checkpoints written
    std::string log_csv_path;     // empty = no CSV log
    bool ema = false;
    double ema_decay = 0.999;
    bool verbose = false;
    int cache_limit = 512;  // keep this many decoded records in memory
};

struct EpochStat {
    int epoch = 0;
    double mean_loss = 0.0;
    double wall_time_sec = 0.0;
};

// One training example decoded to model range: 6-channel coupled target and
// 3-channel morph condition.
template <typename Scalar>
struct TrainItem {
    Tensor<Scalar> coupled;
    Tensor<Scalar> morph;
};

template <typename Scalar>
TrainItem<Scalar> load_train_item(const MorphRecord& r, int resolution) {
    const Tensor<Scalar> morph = load_image<Scalar>(r.morph_path);
    const Tensor<Scalar> a = load_image<Scalar>(r.path_a);
    const Tensor<Scalar> b = load_image<Scalar>(r.path_b);
    if (morph.height != resolution || morph.width != resolution || !a.same_shape(morph) || !b.same_shape(morph))
        throw std::runtime_error("train: image resolution mismatch for " + r.morph_path);
    TrainItem<Scalar> item;
    item.coupled = to_model_range(concat_channels(a, b));
    item.morph = to_model_range(morph);
    return item;
}

// Minimizes the conditional eps-prediction objective over uniformly sampled
// timesteps and Gaussian noise. Fully seeded: epoch e draws from
// derive_seed(seed, 0xE50C + e), so a resumed run replays the exact batches
// an uninterrupted run would have seen.
template <typename Scalar>
std::vector<EpochStat> train_loop(UNet<Scalar>& net, const Manifest& manifest, const VarianceSchedule& sched,
                                  const TrainConfig& tc, uint64_t seed, Adam<Scalar>* opt = nullptr,
                                  int start_epoch = 0, const CheckpointMeta* base_meta = nullptr,
                                  std::vector<nn::Arr<Scalar>>* ema_state = nullptr) {
    const auto train_records = records_in_split(manifest, Split::train);
    if (train_records.empty()) throw std::invalid_argument("train_loop: manifest has no train records");
    if (tc.epochs < 0 || tc.batch_size < 1 || tc.draws_per_record < 1)
        throw std::invalid_argument("train_loop: bad epochs/batch_size/draws_per_record");
    const int res = net.cfg.resolution;

    // decoded-image cache; desk-scale sets fit fully
    std::vector<TrainItem<Scalar>> cache;
    const bool cache_all = static_cast<int>(train_records.size()) <= tc.cache_limit;
    if (cache_all) {
        cache.reserve(train_records.size());
        for (const auto* r : train_records) cache.push_back(load_train_item<Scalar>(*r, res));
    }
    auto get_item = [&](size_t idx) -> TrainItem<Scalar> {
        if (cache_all) return cache[idx];
        return load_train_item<Scalar>(*train_records[idx], res);
    };

    std::unique_ptr<Adam<Scalar>> local_opt;
    if (!opt) {
        AdamConfig ac;
        ac.lr = tc.lr;
        local_opt = std::make_unique<Adam<Scalar>>(net.params, ac);
        opt = local_opt.get();
    }
    std::vector<nn::Arr<Scalar>> local_ema;
    if (tc.ema && !ema_state) {
        for (const auto& p : net.params) local_ema.push_back(*p.value);
        ema_state = &local_ema;
    }

    std::ofstream log;
    if (!tc.log_csv_path.empty()) {
        const bool fresh = start_epoch == 0;
        log.open(tc.log_csv_path, fresh ? std::ios::trunc : std::ios::app);
        if (!log) throw std::runtime_error("train_loop: cannot open log " + tc.log_csv_path);
        if (fresh) log << "epoch,mean_loss,wall_time\n";
    }

    auto write_ckpt = [&](int epochs_done) {
        if (tc.checkpoint_path.empty()) return;
        CheckpointMeta meta;
        if (base_meta) meta = *base_meta;
        meta.seed = seed;
        meta.schedule_hash = schedule_hash(sched);
        meta.epochs_completed = epochs_done;
        save_checkpoint(tc.checkpoint_path, net, meta, opt, tc.ema ? ema_state : nullptr);
    };

    std::vector<EpochStat> stats;
    const size_t n = train_records.size();
    typename UNet<Scalar>::Cache cc;
    for (int epoch = start_epoch + 1; epoch <= tc.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        if (tc.cosine_lr && tc.epochs > 1) {
            const double frac = static_cast<double>(epoch - 1) / static_cast<double>(tc.epochs - 1);
            opt->set_lr(tc.lr * (0.05 + 0.95 * 0.5 * (1.0 + std::cos(3.14159265358979 * frac))));
        }
        Rng rng(derive_seed(seed, 0xE50C + static_cast<uint64_t>(epoch)));
        // each record appears draws_per_record times per epoch, every
        // occurrence with a fresh (t, noise) draw
        std::vector<size_t> order;
        order.reserve(n * static_cast<size_t>(tc.draws_per_record));
        for (int rep = 0; rep < tc.draws_per_record; ++rep) {
            std::vector<size_t> pass(n);
            for (size_t i = 0; i < n; ++i) pass[i] = i;
            for (size_t i = n; i > 1; --i)
                std::swap(pass[i - 1], pass[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
            order.insert(order.end(), pass.begin(), pass.end());
        }

        double loss_sum = 0.0;
        size_t loss_count = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size)) {
            const size_t bsz = std::min(static_cast<size_t>(tc.batch_size), order.size() - start);
            net.zero_grad();
            for (size_t k = 0; k < bsz; ++k) {
                const TrainItem<Scalar> item = get_item(order[start + k]);
                const int t = static_cast<int>(rng.uniform_int(1, sched.T));
                const Tensor<Scalar> eps = gaussian_tensor<Scalar>(6, res, res, rng);
                const Tensor<Scalar> i_t = q_sample(item.coupled, t, eps, sched);
                const Tensor<Scalar> input = concat_channels(i_t, item.morph);
                const Tensor<Scalar> eps_pred = net.forward(input, t, cc);
                loss_sum += static_cast<double>((eps_pred.data - eps.data).square().mean());
                loss_count += 1;
                // d(mean sq err)/d(eps_pred), averaged over the batch
                Tensor<Scalar> dy = eps_pred;
                dy.data = (eps_pred.data - eps.data) *
                          static_cast<Scalar>(2.0 / (static_cast<double>(eps.data.size()) * static_cast<double>(bsz)));
                net.backward(dy, cc);
            }
            opt->step(net.params);
            if (ema_state)
                for (size_t i = 0; i < net.params.size(); ++i)
                    (*ema_state)[i] = static_cast<Scalar>(tc.ema_decay) * (*ema_state)[i] +
                                      static_cast<Scalar>(1.0 - tc.ema_decay) * *net.params[i].value;
        }
        const auto t1 = std::chrono::steady_clock::now();
        EpochStat st;
        st.epoch = epoch;
        st.mean_loss = loss_sum / static_cast<double>(std::max<size_t>(1, loss_count));
        st.wall_time_sec = std::chrono::duration<double>(t1 - t0).count();
        stats.push_back(st);
        if (log) log << st.epoch << ',' << st.mean_loss << ',' << st.wall_time_sec << '\n' << std::flush;
        if (tc.verbose && (epoch % 25 == 0 || epoch == start_epoch + 1))
            std::cerr << "epoch " << epoch << " loss " << st.mean_loss << " (" << st.wall_time_sec << "s)\n";
        if (tc.checkpoint_every > 0 && epoch % tc.checkpoint_every == 0) write_ckpt(epoch);
    }
    if (tc.epochs > start_epoch) write_ckpt(tc.epochs);
    return stats;
}

}  // namespace demorph
