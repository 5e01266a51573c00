#pragma once

#include "demorph/diffusion.hpp"
#include "demorph/image_io.hpp"
#include "demorph/manifest.hpp"
#include "demorph/rng.hpp"
#include "demorph/schedule.hpp"
#include "demorph/unet.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace demorph {

// Evenly strided descending subsequence of {1..T}: first element T, last 1.
// steps == 1 is only meaningful for T == 1; otherwise the sequence could not
// both start at T and end at 1, so it is rejected.
inline std::vector<int> make_timestep_subsequence(int T, int steps) {
    if (T < 1) throw std::invalid_argument("make_timestep_subsequence: T must be >= 1");
    if (steps < 1 || steps > T) throw std::invalid_argument("make_timestep_subsequence: need 1 <= steps <= T");
    if (T == 1) return {1};
    if (steps == 1)
        throw std::invalid_argument("make_timestep_subsequence: steps must be >= 2 so the sequence reaches t=1");
    std::vector<int> seq(steps);
    const int64_t span = T - 1, den = steps - 1;
    for (int i = 0; i < steps; ++i)
        seq[i] = static_cast<int>(T - (2 * static_cast<int64_t>(i) * span + den) / (2 * den));
    for (int i = 1; i < steps; ++i)
        if (seq[i] >= seq[i - 1]) throw std::logic_error("make_timestep_subsequence: sequence not strictly decreasing");
    return seq;
}

enum class ReverseVariance { beta_tilde, beta };

struct SampleOptions {
    int steps = 100;
    bool clamp_x0 = true;
    ReverseVariance variance = ReverseVariance::beta_tilde;
};

// Morph-guided ancestral sampling. Starts from 6-channel Gaussian noise and
// walks the strided timestep subsequence; at each step the morph is
// concatenated to the noisy coupled state before querying the denoiser, and
// the transition to the previous subsequence element uses posterior
// coefficients built from alpha_bar ratios. The step into s = 0 has zero
// posterior variance, so no noise is ever added on the final step.
// Returns the two constituents mapped back to [0,1].
template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> sample(const DenoiseFn<Scalar>& denoiser, const Tensor<Scalar>& morph01,
                                                 const VarianceSchedule& sched, const SampleOptions& opt,
                                                 uint64_t seed) {
    if (morph01.channels != 3) throw std::invalid_argument("sample: morph must be a 3-channel image");
    const int H = morph01.height, W = morph01.width;
    const std::vector<int> seq = make_timestep_subsequence(sched.T, opt.steps);
    const Tensor<Scalar> cond = to_model_range(morph01);

    Rng rng(derive_seed(seed, 0x5A3));
    Tensor<Scalar> o = gaussian_tensor<Scalar>(6, H, W, rng);
    for (size_t i = 0; i < seq.size(); ++i) {
        const int t = seq[i];
        const int s = i + 1 < seq.size() ? seq[i + 1] : 0;
        const Tensor<Scalar> eps_pred = denoiser(concat_channels(o, cond), t);
        if (eps_pred.channels != 6 || eps_pred.height != H || eps_pred.width != W)
            throw std::invalid_argument("sample: denoiser output shape mismatch");
        const Tensor<Scalar> x0 = predict_x0_from_eps(o, eps_pred, t, sched, opt.clamp_x0);

        const double abar_t = sched.alpha_bar_at(t);
        const double abar_s = sched.alpha_bar_at(s);
        const double beta_eff = 1.0 - abar_t / abar_s;
        const double c0 = std::sqrt(abar_s) * beta_eff / (1.0 - abar_t);
        const double ct = std::sqrt(abar_t / abar_s) * (1.0 - abar_s) / (1.0 - abar_t);
        double var = (1.0 - abar_s) / (1.0 - abar_t) * beta_eff;
        if (opt.variance == ReverseVariance::beta) var = beta_eff;

        o.data = x0.data * static_cast<Scalar>(c0) + o.data * static_cast<Scalar>(ct);
        if (s > 0 && var > 0.0) {
            const Tensor<Scalar> z = gaussian_tensor<Scalar>(6, H, W, rng);
            o.data += z.data * static_cast<Scalar>(std::sqrt(var));
        }
    }
    return {from_model_range(slice_channels(o, 0, 3)), from_model_range(slice_channels(o, 3, 3))};
}

template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> sample(const UNet<Scalar>& net, const Tensor<Scalar>& morph01,
                                                 const VarianceSchedule& sched, const SampleOptions& opt,
                                                 uint64_t seed) {
    if (morph01.height != net.cfg.resolution || morph01.width != net.cfg.resolution)
        throw std::invalid_argument("sample: morph resolution does not match the denoiser");
    DenoiseFn<Scalar> fn = [&net](const Tensor<Scalar>& x, int t) {
        typename UNet<Scalar>::Cache cc;
        return net.forward(x, t, cc);
    };
    return sample(fn, morph01, sched, opt, seed);
}

struct DemorphOutput {
    MorphRecord record;
    std::string out1_path, out2_path;
    uint64_t seed = 0;
    double wall_time_sec = 0.0;
};

struct DemorphFailure {
    MorphRecord record;
    std::string error;
};

struct DemorphBatchResult {
    std::vector<DemorphOutput> outputs;
    std::vector<DemorphFailure> failures;
};

// Runs sample() for every test record; per-record seeds are derived from the
// run seed and the record index so a batch is reproducible element-wise.
// Per-record failures (missing or unreadable morphs, wrong resolution) are
// logged and the run continues. Writes o1/o2 PNGs plus a line-delimited JSON
// index.
template <typename Scalar>
DemorphBatchResult demorph_batch(const UNet<Scalar>& net, const std::vector<MorphRecord>& records,
                                 const VarianceSchedule& sched, const SampleOptions& opt, uint64_t run_seed,
                                 const std::string& out_dir, const std::string& index_path) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream index;
    if (!index_path.empty()) {
        index.open(index_path);
        if (!index) throw std::runtime_error("demorph_batch: cannot open index " + index_path);
    }
    DemorphBatchResult result;
    if (records.empty()) std::cerr << "demorph_batch: warning: no records to process\n";
    for (size_t i = 0; i < records.size(); ++i) {
        const MorphRecord& r = records[i];
        const uint64_t rec_seed = derive_seed(run_seed, i);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Tensor<Scalar> morph = load_image<Scalar>(r.morph_path);
            char n1[64], n2[64];
            std::snprintf(n1, sizeof(n1), "out_%05zu_1.png", i);
            std::snprintf(n2, sizeof(n2), "out_%05zu_2.png", i);
            auto [o1, o2] = sample(net, morph, sched, opt, rec_seed);
            DemorphOutput out;
            out.record = r;
            out.out1_path = (fs::path(out_dir) / n1).string();
            out.out2_path = (fs::path(out_dir) / n2).string();
            out.seed = rec_seed;
            save_image(out.out1_path, o1);
            save_image(out.out2_path, o2);
            out.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (index) {
                nlohmann::ordered_json row = record_to_json(r);
                row["type"] = "demorph_output";
                row["out1_path"] = out.out1_path;
                row["out2_path"] = out.out2_path;
                row["seed"] = out.seed;
                row["steps"] = opt.steps;
                row["wall_time"] = out.wall_time_sec;
                index << row.dump() << '\n';
            }
            result.outputs.push_back(std::move(out));
        } catch (const std::exception& e) {
            std::cerr << "demorph_batch: record " << i << " failed: " << e.what() << "\n";
            result.failures.push_back({r, e.what()});
        }
    }
    return result;
}

}  // namespace demorph
