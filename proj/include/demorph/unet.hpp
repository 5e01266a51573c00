#pragma once

#include "demorph/nn.hpp"
#include "demorph/rng.hpp"
#include "demorph/tensor.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace demorph {

// Noise-prediction network configuration. Input is the 9-channel
// (noisy coupled pair + morph) stack, output the 6-channel noise estimate;
// both are fixed by the method.
struct DenoiserConfig {
    int in_channels = 9;
    int out_channels = 6;
    int base_width = 32;
    int depth = 3;                    // resolution levels
    int time_embed_dim = 64;
    int resolution = 64;
    std::vector<int> channel_mult;    // per level; default 1,2,2,4,4,...
    bool attention = true;            // self-attention at the lowest resolution

    std::vector<int> widths() const {
        std::vector<int> w(depth);
        for (int l = 0; l < depth; ++l) {
            int mult;
            if (!channel_mult.empty()) {
                if (static_cast<int>(channel_mult.size()) != depth)
                    throw std::invalid_argument("DenoiserConfig: channel_mult size must equal depth");
                mult = channel_mult[l];
            } else {
                mult = l == 0 ? 1 : (l == 1 ? 2 : (l == 2 ? 2 : 4));
            }
            w[l] = base_width * mult;
        }
        return w;
    }

    void validate() const {
        if (in_channels != 9 || out_channels != 6)
            throw std::invalid_argument("DenoiserConfig: in/out channels are fixed at 9/6");
        if (base_width < 1 || depth < 1 || time_embed_dim < 2 || time_embed_dim % 2 != 0)
            throw std::invalid_argument("DenoiserConfig: bad width/depth/time_embed_dim");
        const int div = 1 << (depth - 1);
        if (resolution <= 0 || resolution % div != 0 || resolution / div < 2)
            throw std::invalid_argument("DenoiserConfig: resolution must be divisible by 2^(depth-1)");
        widths();
    }
};

// U-Net style encoder/decoder over the planar Tensor type. One instance can
// run forwards/backwards for many callers as long as each brings its own
// UNetCache; parameters are shared.
template <typename Scalar>
struct UNet {
    DenoiserConfig cfg;
    nn::ParamList<Scalar> params;

    nn::Linear<Scalar> time_fc1, time_fc2;
    nn::Conv2d<Scalar> in_conv;
    std::vector<nn::ResBlock<Scalar>> enc_rb;
    std::vector<nn::Conv2d<Scalar>> down_conv;  // depth-1 entries
    nn::ResBlock<Scalar> mid1, mid2;
    nn::Attention<Scalar> attn;
    std::vector<nn::ResBlock<Scalar>> dec_rb;
    std::vector<nn::Conv2d<Scalar>> up_conv;  // depth-1 entries, index l maps level l -> l-1
    nn::GroupNorm<Scalar> out_gn;
    nn::Conv2d<Scalar> out_conv;

    struct Cache {
        typename nn::Linear<Scalar>::Cache t1c, t2c;
        nn::Arr<Scalar> temb_pre;  // fc1 output, pre-SiLU
        typename nn::Conv2d<Scalar>::Cache in_c;
        std::vector<typename nn::ResBlock<Scalar>::Cache> enc_c;
        std::vector<typename nn::Conv2d<Scalar>::Cache> down_c;
        std::vector<Tensor<Scalar>> pre_pool;    // input shapes for pool backward
        typename nn::ResBlock<Scalar>::Cache mid1_c, mid2_c;
        typename nn::Attention<Scalar>::Cache attn_c;
        std::vector<typename nn::ResBlock<Scalar>::Cache> dec_c;
        std::vector<typename nn::Conv2d<Scalar>::Cache> up_c;
        std::vector<Tensor<Scalar>> skips;
        typename nn::GroupNorm<Scalar>::Cache ogn_c;
        typename nn::SiLU<Scalar>::Cache oact_c;
        typename nn::Conv2d<Scalar>::Cache oconv_c;
        nn::Arr<Scalar> temb;
    };

    // params holds pointers into member storage
    UNet(const UNet&) = delete;
    UNet& operator=(const UNet&) = delete;

    explicit UNet(const DenoiserConfig& config) : cfg(config) {
        cfg.validate();
        const auto w = cfg.widths();
        const int L = cfg.depth;
        const int D = cfg.time_embed_dim;
        time_fc1.init(D, D, "time.fc1", params);
        time_fc2.init(D, D, "time.fc2", params);
        in_conv.init(cfg.in_channels, w[0], 3, "in_conv", params);
        enc_rb.resize(L);
        down_conv.resize(L - 1);
        dec_rb.resize(L);
        up_conv.resize(L - 1);
        for (int l = 0; l < L; ++l) {
            enc_rb[l].init(w[l], w[l], D, "enc" + std::to_string(l), params);
            if (l + 1 < L) down_conv[l].init(w[l], w[l + 1], 3, "down" + std::to_string(l), params);
        }
        mid1.init(w[L - 1], w[L - 1], D, "mid1", params);
        if (cfg.attention) attn.init(w[L - 1], "attn", params);
        mid2.init(w[L - 1], w[L - 1], D, "mid2", params);
        for (int l = L - 1; l >= 0; --l) {
            dec_rb[l].init(2 * w[l], w[l], D, "dec" + std::to_string(l), params);
            if (l > 0) up_conv[l - 1].init(w[l], w[l - 1], 3, "up" + std::to_string(l - 1), params);
        }
        out_gn.init(w[0], "out.gn", params);
        out_conv.init(w[0], cfg.out_channels, 3, "out.conv", params);
    }

    size_t param_count() const {
        size_t n = 0;
        for (const auto& p : params) n += static_cast<size_t>(p.value->size());
        return n;
    }

    // He-normal weights, zero biases, unit norm scales; the output conv is
    // shrunk so initial predictions start near zero while every branch
    // still carries gradient.
    void init_params(uint64_t seed) {
        Rng rng(mix_seed(seed ^ 0xd3f0));
        for (auto& p : params) {
            if (p.fan_in == 0) continue;  // biases stay zero, norms stay identity
            const double stddev = std::sqrt(2.0 / static_cast<double>(p.fan_in));
            fill_gaussian(*p.value, rng, stddev);
            if (p.name == "out.conv.w") *p.value *= Scalar(0.1);
        }
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, int t, Cache& cc) const {
        if (x.channels != cfg.in_channels) throw std::invalid_argument("UNet::forward: expected 9 input channels");
        const int div = 1 << (cfg.depth - 1);
        if (x.height % div != 0 || x.width % div != 0)
            throw std::invalid_argument("UNet::forward: input dims must divide by 2^(depth-1)");
        nn::SiLU<Scalar> act;
        const int L = cfg.depth;
        cc.enc_c.resize(L);
        cc.down_c.resize(L - 1);
        cc.pre_pool.resize(L - 1);
        cc.dec_c.resize(L);
        cc.up_c.resize(L - 1);
        cc.skips.assign(L, {});

        cc.temb_pre = time_fc1.forward(nn::sinusoidal_embedding<Scalar>(t, cfg.time_embed_dim), cc.t1c);
        nn::Arr<Scalar> t_act(cc.temb_pre.size());
        for (Eigen::Index i = 0; i < t_act.size(); ++i) t_act[i] = nn::silu_of(cc.temb_pre[i]);
        cc.temb = time_fc2.forward(t_act, cc.t2c);

        Tensor<Scalar> h = in_conv.forward(x, cc.in_c);
        for (int l = 0; l < L; ++l) {
            h = enc_rb[l].forward(h, cc.temb, cc.enc_c[l]);
            cc.skips[l] = h;
            if (l + 1 < L) {
                cc.pre_pool[l] = h;  // shape only; pooling has no params
                h = down_conv[l].forward(nn::avgpool2(h), cc.down_c[l]);
            }
        }
        h = mid1.forward(h, cc.temb, cc.mid1_c);
        if (cfg.attention) h = attn.forward(h, cc.attn_c);
        h = mid2.forward(h, cc.temb, cc.mid2_c);
        for (int l = L - 1; l >= 0; --l) {
            h = dec_rb[l].forward(concat_channels(h, cc.skips[l]), cc.temb, cc.dec_c[l]);
            if (l > 0) h = up_conv[l - 1].forward(nn::upsample_nearest2(h), cc.up_c[l - 1]);
        }
        return out_conv.forward(act.forward(out_gn.forward(h, cc.ogn_c), cc.oact_c), cc.oconv_c);
    }

    // Backpropagates dLoss/dOutput, accumulating parameter gradients.
    void backward(const Tensor<Scalar>& dy, Cache& cc) {
        nn::SiLU<Scalar> act;
        const int L = cfg.depth;
        nn::Arr<Scalar> dtemb = nn::Arr<Scalar>::Zero(cfg.time_embed_dim);

        Tensor<Scalar> dh = out_gn.backward(act.backward(out_conv.backward(dy, cc.oconv_c), cc.oact_c), cc.ogn_c);
        std::vector<Tensor<Scalar>> dskips(L);
        for (int l = 0; l <= L - 1; ++l) {
            if (l > 0) dh = nn::upsample_nearest2_backward(up_conv[l - 1].backward(dh, cc.up_c[l - 1]));
            Tensor<Scalar> dcat = dec_rb[l].backward(dh, cc.dec_c[l], dtemb);
            const int w = dec_rb[l].out_ch;
            dh = slice_channels(dcat, 0, w);
            dskips[l] = slice_channels(dcat, w, w);
        }
        dh = mid2.backward(dh, cc.mid2_c, dtemb);
        if (cfg.attention) dh = attn.backward(dh, cc.attn_c);
        dh = mid1.backward(dh, cc.mid1_c, dtemb);
        for (int l = L - 1; l >= 0; --l) {
            if (l + 1 < L) {
                Tensor<Scalar> dpool = down_conv[l].backward(dh, cc.down_c[l]);
                dh = nn::avgpool2_backward(dpool, cc.pre_pool[l].height, cc.pre_pool[l].width);
            }
            dh.data += dskips[l].data;
            dh = enc_rb[l].backward(dh, cc.enc_c[l], dtemb);
        }
        in_conv.backward(dh, cc.in_c);

        nn::Arr<Scalar> dt_act = time_fc2.backward(dtemb, cc.t2c);
        nn::Arr<Scalar> dt_pre(dt_act.size());
        for (Eigen::Index i = 0; i < dt_pre.size(); ++i) dt_pre[i] = dt_act[i] * nn::silu_grad_of(cc.temb_pre[i]);
        time_fc1.backward(dt_pre, cc.t1c);
    }

    void zero_grad() {
        for (auto& p : params) p.grad->setZero();
    }
};

// Deterministic construction: same config and seed gives bit-identical
// parameters. Returns the ready-to-train network.
template <typename Scalar>
std::unique_ptr<UNet<Scalar>> build_denoiser(const DenoiserConfig& cfg, uint64_t seed) {
    auto net = std::make_unique<UNet<Scalar>>(cfg);
    net->init_params(seed);
    return net;
}

}  // namespace demorph
