#pragma once

#include "demorph/nn.hpp"

#include <cstdint>
#include <vector>

namespace demorph {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename Scalar>
class Adam {
   public:
    Adam(const nn::ParamList<Scalar>& params, AdamConfig cfg) : cfg_(cfg) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const auto& p : params) {
            m_.push_back(nn::Arr<Scalar>::Zero(p.value->size()));
            v_.push_back(nn::Arr<Scalar>::Zero(p.value->size()));
        }
    }

    void step(nn::ParamList<Scalar>& params) {
        ++step_count_;
        const Scalar b1 = static_cast<Scalar>(cfg_.beta1), b2 = static_cast<Scalar>(cfg_.beta2);
        const Scalar corr1 = static_cast<Scalar>(1.0 - std::pow(cfg_.beta1, step_count_));
        const Scalar corr2 = static_cast<Scalar>(1.0 - std::pow(cfg_.beta2, step_count_));
        const Scalar lr = static_cast<Scalar>(cfg_.lr), eps = static_cast<Scalar>(cfg_.eps);
        for (size_t i = 0; i < params.size(); ++i) {
            auto& g = *params[i].grad;
            m_[i] = b1 * m_[i] + (Scalar(1) - b1) * g;
            v_[i] = b2 * v_[i] + (Scalar(1) - b2) * g.square();
            *params[i].value -= lr * (m_[i] / corr1) / ((v_[i] / corr2).sqrt() + eps);
        }
    }

    int64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

    // checkpoint access
    std::vector<nn::Arr<Scalar>>& moments1() { return m_; }
    std::vector<nn::Arr<Scalar>>& moments2() { return v_; }
    void set_step_count(int64_t n) { step_count_ = n; }
    void set_lr(double lr) { cfg_.lr = lr; }

   private:
    AdamConfig cfg_;
    int64_t step_count_ = 0;
    std::vector<nn::Arr<Scalar>> m_, v_;
};

}  // namespace demorph
