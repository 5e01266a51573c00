#pragma once

#include "demorph/schedule.hpp"
#include "demorph/tensor.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace demorph {

// A denoiser is anything mapping a 9-channel (noisy pair + morph) stack and a
// timestep to a 6-channel noise estimate.
template <typename Scalar>
using DenoiseFn = std::function<Tensor<Scalar>(const Tensor<Scalar>&, int)>;

// Forward marginal: i_t = sqrt(abar_t) i0 + sqrt(1 - abar_t) eps, applied to
// the whole coupled stack. Noise is injected by the caller so draws stay
// seedable.
template <typename Scalar>
Tensor<Scalar> q_sample(const Tensor<Scalar>& i0, int t, const Tensor<Scalar>& eps, const VarianceSchedule& sched) {
    sched.check_t(t);
    if (!i0.same_shape(eps)) throw std::invalid_argument("q_sample: shape mismatch");
    const double abar = sched.alpha_bar_at(t);
    Tensor<Scalar> r = i0;
    r.data = i0.data * static_cast<Scalar>(std::sqrt(abar)) + eps.data * static_cast<Scalar>(std::sqrt(1.0 - abar));
    return r;
}

// q(x_{t-1} | x_t, x_0) statistics.
//   mean = sqrt(abar_{t-1}) beta_t / (1-abar_t) * x0
//        + sqrt(alpha_t) (1-abar_{t-1}) / (1-abar_t) * x_t
//   var  = beta_tilde_t
template <typename Scalar>
std::pair<Tensor<Scalar>, double> posterior_mean_variance(const Tensor<Scalar>& i_t, const Tensor<Scalar>& i0, int t,
                                                          const VarianceSchedule& sched) {
    sched.check_t(t);
    if (!i_t.same_shape(i0)) throw std::invalid_argument("posterior_mean_variance: shape mismatch");
    const double abar_t = sched.alpha_bar_at(t);
    const double abar_prev = sched.alpha_bar_at(t - 1);
    const double beta_t = sched.beta[t - 1];
    const double alpha_t = sched.alpha[t - 1];
    const double c0 = std::sqrt(abar_prev) * beta_t / (1.0 - abar_t);
    const double ct = std::sqrt(alpha_t) * (1.0 - abar_prev) / (1.0 - abar_t);
    Tensor<Scalar> mean = i0;
    mean.data = i0.data * static_cast<Scalar>(c0) + i_t.data * static_cast<Scalar>(ct);
    return {std::move(mean), sched.beta_tilde[t - 1]};
}

// Inverts the forward marginal: x0 = (x_t - sqrt(1-abar_t) eps) / sqrt(abar_t).
template <typename Scalar>
Tensor<Scalar> predict_x0_from_eps(const Tensor<Scalar>& i_t, const Tensor<Scalar>& eps_pred, int t,
                                   const VarianceSchedule& sched, bool clamp_to_range = false) {
    sched.check_t(t);
    if (!i_t.same_shape(eps_pred)) throw std::invalid_argument("predict_x0_from_eps: shape mismatch");
    const double abar = sched.alpha_bar_at(t);
    Tensor<Scalar> r = i_t;
    r.data = (i_t.data - eps_pred.data * static_cast<Scalar>(std::sqrt(1.0 - abar))) / static_cast<Scalar>(std::sqrt(abar));
    if (clamp_to_range) r.data = r.data.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
    return r;
}

// Conditional denoising objective for one draw:
//   L = mean || eps - eps_theta((i_t, x), t) ||^2
// where i_t = q_sample(i0, t, eps) and x is the morph, concatenated along
// channels into the 9-channel network input.
template <typename Scalar>
Scalar training_loss(const DenoiseFn<Scalar>& denoiser, const Tensor<Scalar>& i0, const Tensor<Scalar>& morph, int t,
                     const Tensor<Scalar>& eps, const VarianceSchedule& sched) {
    if (i0.channels != 2 * morph.channels || i0.height != morph.height || i0.width != morph.width)
        throw std::invalid_argument("training_loss: coupled sample must stack two images of the morph's shape");
    const Tensor<Scalar> i_t = q_sample(i0, t, eps, sched);
    const Tensor<Scalar> input = concat_channels(i_t, morph);
    const Tensor<Scalar> eps_pred = denoiser(input, t);
    if (!eps_pred.same_shape(eps)) throw std::invalid_argument("training_loss: denoiser output shape mismatch");
    return static_cast<Scalar>((eps_pred.data - eps.data).square().mean());
}

}  // namespace demorph
