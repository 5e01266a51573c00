#pragma once

#include "demorph/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace demorph {

// PSNR over all channels with data range 1.0. Identical images would be
// +inf, reported as a 100 dB cap instead.
template <typename Scalar>
double psnr(const Tensor<Scalar>& out, const Tensor<Scalar>& truth, double cap_db = 100.0) {
    if (!out.same_shape(truth)) throw std::invalid_argument("psnr: shape mismatch");
    const double mse = (out.data.template cast<double>() - truth.data.template cast<double>()).square().mean();
    if (mse <= 1e-10) return cap_db;
    return std::min(cap_db, 10.0 * std::log10(1.0 / mse));
}

// SSIM with k1=0.01, k2=0.03, uniform 7x7 window, data range 1.0; the map is
// averaged over valid window positions and channels. Falls back to a smaller
// odd window for images below 7 pixels.
template <typename Scalar>
double ssim(const Tensor<Scalar>& a, const Tensor<Scalar>& b, int window = 7) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
    int win = std::min({window, a.height, a.width});
    if (win % 2 == 0) --win;
    if (win < 1) throw std::invalid_argument("ssim: image too small");
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const double n = static_cast<double>(win) * win;
    double total = 0.0;
    long count = 0;
    for (int c = 0; c < a.channels; ++c) {
        for (int y = 0; y + win <= a.height; ++y) {
            for (int x = 0; x + win <= a.width; ++x) {
                double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                for (int dy = 0; dy < win; ++dy)
                    for (int dx = 0; dx < win; ++dx) {
                        const double va = a.at(c, y + dy, x + dx);
                        const double vb = b.at(c, y + dy, x + dx);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                const double mua = sa / n, mub = sb / n;
                const double vara = saa / n - mua * mua;
                const double varb = sbb / n - mub * mub;
                const double cov = sab / n - mua * mub;
                total += ((2 * mua * mub + c1) * (2 * cov + c2)) /
                         ((mua * mua + mub * mub + c1) * (vara + varb + c2));
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

template <typename Scalar>
std::pair<double, double> image_metrics(const Tensor<Scalar>& out, const Tensor<Scalar>& truth) {
    return {psnr(out, truth), ssim(out, truth)};
}

}  // namespace demorph
