#pragma once

#include "demorph/tensor.hpp"

#include <cstdint>
#include <random>

namespace demorph {

// splitmix64; used to derive independent sub-seeds from one run seed.
inline uint64_t mix_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    return mix_seed(seed ^ mix_seed(stream + 1));
}

class Rng {
   public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi]; modulo bias is irrelevant at our ranges and
    // keeps the draw identical across standard libraries
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(engine_() % span);
    }

    // Box-Muller; avoids std::normal_distribution so sequences are
    // reproducible independent of the standard library
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

   private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

template <typename Scalar>
Tensor<Scalar> gaussian_tensor(int c, int h, int w, Rng& rng) {
    Tensor<Scalar> t(c, h, w);
    for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<Scalar>(rng.gaussian());
    return t;
}

template <typename Scalar>
void fill_gaussian(Eigen::Array<Scalar, Eigen::Dynamic, 1>& a, Rng& rng, double scale = 1.0) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = static_cast<Scalar>(rng.gaussian() * scale);
}

}  // namespace demorph
