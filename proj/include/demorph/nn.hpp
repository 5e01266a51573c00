#pragma once

#include "demorph/rng.hpp"
#include "demorph/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

// Small dense NN toolkit: each layer owns parameters and gradient buffers and
// exposes forward(x, cache) / backward(dy, cache). Activations needed by the
// backward pass live in per-call cache structs, so one network instance can
// serve concurrent callers that bring their own caches.
namespace demorph::nn {

template <typename Scalar>
using Arr = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using MatCM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct ParamRef {
    std::string name;
    Arr<Scalar>* value;
    Arr<Scalar>* grad;
    Eigen::Index fan_in = 0;  // nonzero marks a weight that gets He init
};

template <typename Scalar>
using ParamList = std::vector<ParamRef<Scalar>>;

template <typename Scalar>
inline Scalar silu_of(Scalar x) {
    const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-x));
    return x * s;
}

template <typename Scalar>
inline Scalar silu_grad_of(Scalar x) {
    const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-x));
    return s * (Scalar(1) + x * (Scalar(1) - s));
}

// ---------------------------------------------------------------- Conv2d
// 3x3 (pad 1) or 1x1 convolution, stride 1. Weight layout [co][ci][ky][kx].
template <typename Scalar>
struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 3;
    Arr<Scalar> w, b, gw, gb;

    struct Cache {
        MatRM<Scalar> patches;       // ksize==3: (in_ch*9) x (H*W)
        Tensor<Scalar> input;        // ksize==1 keeps the input instead
        int h = 0, wd = 0;
    };

    void init(int in_channels, int out_channels, int kernel, const std::string& prefix, ParamList<Scalar>& params) {
        in_ch = in_channels;
        out_ch = out_channels;
        ksize = kernel;
        const int k2 = ksize * ksize;
        w = Arr<Scalar>::Zero(static_cast<Eigen::Index>(out_ch) * in_ch * k2);
        b = Arr<Scalar>::Zero(out_ch);
        gw = Arr<Scalar>::Zero(w.size());
        gb = Arr<Scalar>::Zero(b.size());
        params.push_back({prefix + ".w", &w, &gw, static_cast<Eigen::Index>(in_ch) * k2});
        params.push_back({prefix + ".b", &b, &gb, 0});
    }

    static void im2col(const Tensor<Scalar>& x, MatRM<Scalar>& patches) {
        const int H = x.height, W = x.width, C = x.channels;
        patches.resize(static_cast<Eigen::Index>(C) * 9, static_cast<Eigen::Index>(H) * W);
        for (int c = 0; c < C; ++c) {
            const Scalar* plane = x.data.data() + static_cast<Eigen::Index>(c) * H * W;
            for (int k = 0; k < 9; ++k) {
                const int dy = k / 3 - 1, dx = k % 3 - 1;
                Scalar* row = patches.data() + (static_cast<Eigen::Index>(c) * 9 + k) * H * W;
                Eigen::Map<Arr<Scalar>>(row, static_cast<Eigen::Index>(H) * W).setZero();
                const int x_lo = std::max(0, -dx), x_hi = W - 1 - std::max(0, dx);
                const int len = x_hi - x_lo + 1;
                if (len <= 0) continue;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= H) continue;
                    std::copy(plane + static_cast<Eigen::Index>(sy) * W + x_lo + dx,
                              plane + static_cast<Eigen::Index>(sy) * W + x_lo + dx + len,
                              row + static_cast<Eigen::Index>(y) * W + x_lo);
                }
            }
        }
    }

    static void col2im_add(const MatRM<Scalar>& dpatches, Tensor<Scalar>& dx) {
        const int H = dx.height, W = dx.width, C = dx.channels;
        for (int c = 0; c < C; ++c) {
            Scalar* plane = dx.data.data() + static_cast<Eigen::Index>(c) * H * W;
            for (int k = 0; k < 9; ++k) {
                const int dy = k / 3 - 1, dxo = k % 3 - 1;
                const Scalar* row = dpatches.data() + (static_cast<Eigen::Index>(c) * 9 + k) * H * W;
                const int x_lo = std::max(0, -dxo), x_hi = W - 1 - std::max(0, dxo);
                const int len = x_hi - x_lo + 1;
                if (len <= 0) continue;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= H) continue;
                    Eigen::Map<Arr<Scalar>>(plane + static_cast<Eigen::Index>(sy) * W + x_lo + dxo, len) +=
                        Eigen::Map<const Arr<Scalar>>(row + static_cast<Eigen::Index>(y) * W + x_lo, len);
                }
            }
        }
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& cc) const {
        assert(x.channels == in_ch);
        const int H = x.height, W = x.width;
        const Eigen::Index HW = static_cast<Eigen::Index>(H) * W;
        cc.h = H;
        cc.wd = W;
        Tensor<Scalar> out(out_ch, H, W);
        Eigen::Map<MatRM<Scalar>> out_map(out.data.data(), out_ch, HW);
        Eigen::Map<const MatRM<Scalar>> w_map(w.data(), out_ch, w.size() / out_ch);
        Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> b_vec(b.data(), out_ch);
        if (ksize == 3) {
            im2col(x, cc.patches);
            out_map.noalias() = w_map * cc.patches;
        } else {
            cc.input = x;
            Eigen::Map<const MatRM<Scalar>> x_map(x.data.data(), in_ch, HW);
            out_map.noalias() = w_map * x_map;
        }
        out_map.colwise() += b_vec;
        return out;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& cc) {
        const int H = cc.h, W = cc.wd;
        const Eigen::Index HW = static_cast<Eigen::Index>(H) * W;
        Eigen::Map<const MatRM<Scalar>> dy_map(dy.data.data(), out_ch, HW);
        Eigen::Map<MatRM<Scalar>> gw_map(gw.data(), out_ch, w.size() / out_ch);
        Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> gb_vec(gb.data(), out_ch);
        Eigen::Map<const MatRM<Scalar>> w_map(w.data(), out_ch, w.size() / out_ch);
        gb_vec.noalias() += dy_map.rowwise().sum();
        Tensor<Scalar> dx(in_ch, H, W);
        if (ksize == 3) {
            gw_map.noalias() += dy_map * cc.patches.transpose();
            MatRM<Scalar> dpatches(static_cast<Eigen::Index>(in_ch) * 9, HW);
            dpatches.noalias() = w_map.transpose() * dy_map;
            dx.data.setZero();
            col2im_add(dpatches, dx);
        } else {
            Eigen::Map<const MatRM<Scalar>> x_map(cc.input.data.data(), in_ch, HW);
            gw_map.noalias() += dy_map * x_map.transpose();
            Eigen::Map<MatRM<Scalar>> dx_map(dx.data.data(), in_ch, HW);
            dx_map.noalias() = w_map.transpose() * dy_map;
        }
        return dx;
    }
};

// ---------------------------------------------------------------- Linear
template <typename Scalar>
struct Linear {
    int in_dim = 0, out_dim = 0;
    Arr<Scalar> w, b, gw, gb;

    struct Cache {
        Arr<Scalar> input;
    };

    void init(int in, int out, const std::string& prefix, ParamList<Scalar>& params) {
        in_dim = in;
        out_dim = out;
        w = Arr<Scalar>::Zero(static_cast<Eigen::Index>(in) * out);
        b = Arr<Scalar>::Zero(out);
        gw = Arr<Scalar>::Zero(w.size());
        gb = Arr<Scalar>::Zero(b.size());
        params.push_back({prefix + ".w", &w, &gw, in});
        params.push_back({prefix + ".b", &b, &gb, 0});
    }

    Arr<Scalar> forward(const Arr<Scalar>& x, Cache& cc) const {
        cc.input = x;
        Eigen::Map<const MatRM<Scalar>> w_map(w.data(), out_dim, in_dim);
        Arr<Scalar> y(out_dim);
        y.matrix().noalias() = w_map * x.matrix();
        y += b;
        return y;
    }

    Arr<Scalar> backward(const Arr<Scalar>& dy, const Cache& cc) {
        Eigen::Map<const MatRM<Scalar>> w_map(w.data(), out_dim, in_dim);
        Eigen::Map<MatRM<Scalar>> gw_map(gw.data(), out_dim, in_dim);
        gw_map.noalias() += dy.matrix() * cc.input.matrix().transpose();
        gb += dy;
        Arr<Scalar> dx(in_dim);
        dx.matrix().noalias() = w_map.transpose() * dy.matrix();
        return dx;
    }
};

// ---------------------------------------------------------------- GroupNorm
template <typename Scalar>
struct GroupNorm {
    int channels = 0, groups = 1;
    static constexpr double kEps = 1e-5;
    Arr<Scalar> gamma, beta, ggamma, gbeta;

    struct Cache {
        Tensor<Scalar> xhat;
        std::vector<Scalar> inv_std;
    };

    static int pick_groups(int channels, int preferred = 8) {
        for (int g = std::min(preferred, channels); g > 1; --g)
            if (channels % g == 0) return g;
        return 1;
    }

    void init(int ch, const std::string& prefix, ParamList<Scalar>& params, int preferred_groups = 8) {
        channels = ch;
        groups = pick_groups(ch, preferred_groups);
        gamma = Arr<Scalar>::Ones(ch);
        beta = Arr<Scalar>::Zero(ch);
        ggamma = Arr<Scalar>::Zero(ch);
        gbeta = Arr<Scalar>::Zero(ch);
        params.push_back({prefix + ".g", &gamma, &ggamma, 0});
        params.push_back({prefix + ".b", &beta, &gbeta, 0});
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& cc) const {
        assert(x.channels == channels);
        const Eigen::Index HW = static_cast<Eigen::Index>(x.height) * x.width;
        const int cg = channels / groups;
        const Eigen::Index glen = cg * HW;
        cc.xhat = Tensor<Scalar>(x.channels, x.height, x.width);
        cc.inv_std.assign(groups, Scalar(0));
        Tensor<Scalar> y(x.channels, x.height, x.width);
        for (int g = 0; g < groups; ++g) {
            auto xs = x.data.segment(g * glen, glen);
            const Scalar mu = xs.mean();
            const Scalar var = (xs - mu).square().mean();
            const Scalar inv = Scalar(1) / std::sqrt(var + Scalar(kEps));
            cc.inv_std[g] = inv;
            cc.xhat.data.segment(g * glen, glen) = (xs - mu) * inv;
        }
        for (int c = 0; c < channels; ++c)
            y.data.segment(c * HW, HW) = cc.xhat.data.segment(c * HW, HW) * gamma[c] + beta[c];
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& cc) {
        const Eigen::Index HW = static_cast<Eigen::Index>(dy.height) * dy.width;
        const int cg = channels / groups;
        const Eigen::Index glen = cg * HW;
        Tensor<Scalar> dxhat(dy.channels, dy.height, dy.width);
        for (int c = 0; c < channels; ++c) {
            auto dyc = dy.data.segment(c * HW, HW);
            auto xhc = cc.xhat.data.segment(c * HW, HW);
            ggamma[c] += (dyc * xhc).sum();
            gbeta[c] += dyc.sum();
            dxhat.data.segment(c * HW, HW) = dyc * gamma[c];
        }
        Tensor<Scalar> dx(dy.channels, dy.height, dy.width);
        const Scalar n = static_cast<Scalar>(glen);
        for (int g = 0; g < groups; ++g) {
            auto dxh = dxhat.data.segment(g * glen, glen);
            auto xh = cc.xhat.data.segment(g * glen, glen);
            const Scalar s1 = dxh.sum();
            const Scalar s2 = (dxh * xh).sum();
            dx.data.segment(g * glen, glen) = cc.inv_std[g] * (dxh - (s1 + xh * s2) / n);
        }
        return dx;
    }
};

// ---------------------------------------------------------------- SiLU
template <typename Scalar>
struct SiLU {
    struct Cache {
        Tensor<Scalar> input;
    };

    Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& cc) const {
        cc.input = x;
        Tensor<Scalar> y = x;
        y.data = x.data / (Scalar(1) + (-x.data).exp()) ;
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& cc) const {
        Tensor<Scalar> dx = dy;
        const auto& x = cc.input.data;
        auto sig = Scalar(1) / (Scalar(1) + (-x).exp());
        dx.data = dy.data * sig * (Scalar(1) + x * (Scalar(1) - sig));
        return dx;
    }
};

// ------------------------------------------------------------- Resampling
template <typename Scalar>
Tensor<Scalar> avgpool2(const Tensor<Scalar>& x) {
    assert(x.height % 2 == 0 && x.width % 2 == 0);
    Tensor<Scalar> y(x.channels, x.height / 2, x.width / 2);
    for (int c = 0; c < x.channels; ++c)
        for (int yy = 0; yy < y.height; ++yy)
            for (int xx = 0; xx < y.width; ++xx)
                y.at(c, yy, xx) = Scalar(0.25) * (x.at(c, 2 * yy, 2 * xx) + x.at(c, 2 * yy, 2 * xx + 1) +
                                                  x.at(c, 2 * yy + 1, 2 * xx) + x.at(c, 2 * yy + 1, 2 * xx + 1));
    return y;
}

template <typename Scalar>
Tensor<Scalar> avgpool2_backward(const Tensor<Scalar>& dy, int in_h, int in_w) {
    Tensor<Scalar> dx(dy.channels, in_h, in_w);
    for (int c = 0; c < dy.channels; ++c)
        for (int yy = 0; yy < dy.height; ++yy)
            for (int xx = 0; xx < dy.width; ++xx) {
                const Scalar v = Scalar(0.25) * dy.at(c, yy, xx);
                dx.at(c, 2 * yy, 2 * xx) = v;
                dx.at(c, 2 * yy, 2 * xx + 1) = v;
                dx.at(c, 2 * yy + 1, 2 * xx) = v;
                dx.at(c, 2 * yy + 1, 2 * xx + 1) = v;
            }
    return dx;
}

template <typename Scalar>
Tensor<Scalar> upsample_nearest2(const Tensor<Scalar>& x) {
    Tensor<Scalar> y(x.channels, x.height * 2, x.width * 2);
    for (int c = 0; c < x.channels; ++c)
        for (int yy = 0; yy < y.height; ++yy)
            for (int xx = 0; xx < y.width; ++xx) y.at(c, yy, xx) = x.at(c, yy / 2, xx / 2);
    return y;
}

template <typename Scalar>
Tensor<Scalar> upsample_nearest2_backward(const Tensor<Scalar>& dy) {
    Tensor<Scalar> dx(dy.channels, dy.height / 2, dy.width / 2);
    for (int c = 0; c < dy.channels; ++c)
        for (int yy = 0; yy < dx.height; ++yy)
            for (int xx = 0; xx < dx.width; ++xx)
                dx.at(c, yy, xx) = dy.at(c, 2 * yy, 2 * xx) + dy.at(c, 2 * yy, 2 * xx + 1) +
                                   dy.at(c, 2 * yy + 1, 2 * xx) + dy.at(c, 2 * yy + 1, 2 * xx + 1);
    return dx;
}

// ---------------------------------------------------------------- ResBlock
// h = conv1(silu(gn1(x))); h += time_proj(silu(temb)) per channel;
// out = conv2(silu(gn2(h))) + skip(x)
template <typename Scalar>
struct ResBlock {
    int in_ch = 0, out_ch = 0;
    GroupNorm<Scalar> gn1, gn2;
    Conv2d<Scalar> conv1, conv2;
    Linear<Scalar> time_proj;
    Conv2d<Scalar> skip;  // 1x1, only when in_ch != out_ch
    bool has_skip = false;

    struct Cache {
        typename GroupNorm<Scalar>::Cache gn1c, gn2c;
        typename SiLU<Scalar>::Cache act1c, act2c;
        typename Conv2d<Scalar>::Cache c1c, c2c, skc;
        typename Linear<Scalar>::Cache tpc;
        Arr<Scalar> temb_in;
    };

    void init(int in, int out, int temb_dim, const std::string& prefix, ParamList<Scalar>& params) {
        in_ch = in;
        out_ch = out;
        gn1.init(in, prefix + ".gn1", params);
        conv1.init(in, out, 3, prefix + ".conv1", params);
        time_proj.init(temb_dim, out, prefix + ".temb", params);
        gn2.init(out, prefix + ".gn2", params);
        conv2.init(out, out, 3, prefix + ".conv2", params);
        has_skip = in != out;
        if (has_skip) skip.init(in, out, 1, prefix + ".skip", params);
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, const Arr<Scalar>& temb, Cache& cc) const {
        SiLU<Scalar> act;
        cc.temb_in = temb;
        Tensor<Scalar> h = conv1.forward(act.forward(gn1.forward(x, cc.gn1c), cc.act1c), cc.c1c);
        Arr<Scalar> t_in = temb;
        for (Eigen::Index i = 0; i < t_in.size(); ++i) t_in[i] = silu_of(t_in[i]);
        typename Linear<Scalar>::Cache* tp = &cc.tpc;
        Arr<Scalar> bias = time_proj.forward(t_in, *tp);
        const Eigen::Index HW = static_cast<Eigen::Index>(h.height) * h.width;
        for (int c = 0; c < out_ch; ++c) h.data.segment(c * HW, HW) += bias[c];
        Tensor<Scalar> h2 = conv2.forward(act.forward(gn2.forward(h, cc.gn2c), cc.act2c), cc.c2c);
        if (has_skip) {
            Tensor<Scalar> s = skip.forward(x, cc.skc);
            h2.data += s.data;
        } else {
            h2.data += x.data;
        }
        return h2;
    }

    // returns dx; the gradient w.r.t. temb is accumulated into dtemb
    Tensor<Scalar> backward(const Tensor<Scalar>& dy, Cache& cc, Arr<Scalar>& dtemb) {
        SiLU<Scalar> act;
        Tensor<Scalar> dh = gn2.backward(act.backward(conv2.backward(dy, cc.c2c), cc.act2c), cc.gn2c);
        // bias add: gradient wrt bias[c] = sum over plane
        const Eigen::Index HW = static_cast<Eigen::Index>(dh.height) * dh.width;
        Arr<Scalar> dbias(out_ch);
        for (int c = 0; c < out_ch; ++c) dbias[c] = dh.data.segment(c * HW, HW).sum();
        Arr<Scalar> dt_in = time_proj.backward(dbias, cc.tpc);
        for (Eigen::Index i = 0; i < dt_in.size(); ++i) dtemb[i] += dt_in[i] * silu_grad_of(cc.temb_in[i]);
        Tensor<Scalar> dx = gn1.backward(act.backward(conv1.backward(dh, cc.c1c), cc.act1c), cc.gn1c);
        if (has_skip) {
            Tensor<Scalar> ds = skip.backward(dy, cc.skc);
            dx.data += ds.data;
        } else {
            dx.data += dy.data;
        }
        return dx;
    }
};

// ------------------------------------------------------------- Attention
// Single-head self-attention over spatial positions with a residual
// connection: out = x + proj(attend(qkv(gn(x)))).
template <typename Scalar>
struct Attention {
    int channels = 0;
    GroupNorm<Scalar> gn;
    Conv2d<Scalar> qkv;   // 1x1, C -> 3C
    Conv2d<Scalar> proj;  // 1x1, C -> C

    struct Cache {
        typename GroupNorm<Scalar>::Cache gnc;
        typename Conv2d<Scalar>::Cache qkvc, projc;
        Tensor<Scalar> qkv_out;
        MatCM<Scalar> attn;  // N x N row-stochastic
    };

    void init(int ch, const std::string& prefix, ParamList<Scalar>& params) {
        channels = ch;
        gn.init(ch, prefix + ".gn", params);
        qkv.init(ch, 3 * ch, 1, prefix + ".qkv", params);
        proj.init(ch, ch, 1, prefix + ".proj", params);
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& cc) const {
        const int C = channels;
        const Eigen::Index N = static_cast<Eigen::Index>(x.height) * x.width;
        cc.qkv_out = qkv.forward(gn.forward(x, cc.gnc), cc.qkvc);
        Eigen::Map<const MatRM<Scalar>> q(cc.qkv_out.data.data(), C, N);
        Eigen::Map<const MatRM<Scalar>> k(cc.qkv_out.data.data() + C * N, C, N);
        Eigen::Map<const MatRM<Scalar>> v(cc.qkv_out.data.data() + 2 * C * N, C, N);
        const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(C));
        MatCM<Scalar> s(N, N);
        s.noalias() = q.transpose() * k;
        s *= scale;
        // row softmax
        cc.attn.resize(N, N);
        for (Eigen::Index i = 0; i < N; ++i) {
            const Scalar m = s.row(i).maxCoeff();
            cc.attn.row(i) = (s.row(i).array() - m).exp();
            cc.attn.row(i) /= cc.attn.row(i).sum();
        }
        Tensor<Scalar> o(C, x.height, x.width);
        Eigen::Map<MatRM<Scalar>> o_map(o.data.data(), C, N);
        o_map.noalias() = v * cc.attn.transpose();
        Tensor<Scalar> y = proj.forward(o, cc.projc);
        y.data += x.data;
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& dy, Cache& cc) {
        const int C = channels;
        const Eigen::Index N = static_cast<Eigen::Index>(dy.height) * dy.width;
        Tensor<Scalar> do_ = proj.backward(dy, cc.projc);
        Eigen::Map<const MatRM<Scalar>> q(cc.qkv_out.data.data(), C, N);
        Eigen::Map<const MatRM<Scalar>> k(cc.qkv_out.data.data() + C * N, C, N);
        Eigen::Map<const MatRM<Scalar>> v(cc.qkv_out.data.data() + 2 * C * N, C, N);
        Eigen::Map<const MatRM<Scalar>> dO(do_.data.data(), C, N);
        const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(C));

        Tensor<Scalar> dqkv(3 * C, dy.height, dy.width);
        Eigen::Map<MatRM<Scalar>> dq(dqkv.data.data(), C, N);
        Eigen::Map<MatRM<Scalar>> dk(dqkv.data.data() + C * N, C, N);
        Eigen::Map<MatRM<Scalar>> dv(dqkv.data.data() + 2 * C * N, C, N);

        dv.noalias() = dO * cc.attn;
        MatCM<Scalar> dA(N, N);
        dA.noalias() = dO.transpose() * v;  // dA_ij = dO(:,i) . v(:,j)
        MatCM<Scalar> dS(N, N);
        for (Eigen::Index i = 0; i < N; ++i) {
            const Scalar dot = (dA.row(i).array() * cc.attn.row(i).array()).sum();
            dS.row(i) = cc.attn.row(i).array() * (dA.row(i).array() - dot);
        }
        dq.noalias() = (k * dS.transpose()) * scale;
        dk.noalias() = (q * dS) * scale;

        Tensor<Scalar> dx = gn.backward(qkv.backward(dqkv, cc.qkvc), cc.gnc);
        dx.data += dy.data;
        return dx;
    }
};

// Sinusoidal timestep features, dim must be even.
template <typename Scalar>
Arr<Scalar> sinusoidal_embedding(int t, int dim) {
    Arr<Scalar> e(dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / std::max(1, half - 1));
        e[i] = static_cast<Scalar>(std::sin(t * freq));
        e[half + i] = static_cast<Scalar>(std::cos(t * freq));
    }
    return e;
}

}  // namespace demorph::nn
