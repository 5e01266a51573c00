#pragma once

#include <cstdint>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace demorph {

// Forward-process variance schedule. Sequences are indexed by timestep
// t in {1..T}; element [t-1] belongs to step t. alpha_bar(0) is defined
// as 1, which makes beta_tilde(1) exactly 0 and the final reverse step
// noiseless. All derived sequences are computed once in double precision.
struct VarianceSchedule {
    int T = 0;
    std::vector<double> beta;        // beta_t
    std::vector<double> alpha;       // 1 - beta_t
    std::vector<double> alpha_bar;   // prod_{s<=t} alpha_s
    std::vector<double> beta_tilde;  // (1 - abar_{t-1}) / (1 - abar_t) * beta_t

    double alpha_bar_at(int t) const {  // accepts t in {0..T}
        if (t < 0 || t > T) throw std::out_of_range("alpha_bar_at: t out of range");
        return t == 0 ? 1.0 : alpha_bar[t - 1];
    }

    void check_t(int t) const {
        if (t < 1 || t > T) throw std::out_of_range("timestep out of range [1,T]");
    }
};

inline VarianceSchedule linear_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::invalid_argument("linear_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw std::invalid_argument("linear_schedule: need 0 < beta_start <= beta_end < 1");
    VarianceSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.beta_tilde.resize(T);
    double abar = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
        // endpoints are exact; rounding in the interpolation must not move them
        const double b = t == 1 ? beta_start : (t == T ? beta_end : beta_start + (beta_end - beta_start) * frac);
        const double prev_abar = abar;
        s.beta[t - 1] = b;
        s.alpha[t - 1] = 1.0 - b;
        abar *= 1.0 - b;
        s.alpha_bar[t - 1] = abar;
        s.beta_tilde[t - 1] = (1.0 - prev_abar) / (1.0 - abar) * b;
    }
    return s;
}

// FNV-1a over T and the raw beta bit patterns; checkpoints carry this so a
// sampler run can refuse a schedule that differs from the one trained with.
inline uint64_t schedule_hash(const VarianceSchedule& s) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    int64_t T64 = s.T;
    mix(&T64, sizeof(T64));
    for (double b : s.beta) {
        uint64_t bits;
        std::memcpy(&bits, &b, sizeof(bits));
        mix(&bits, sizeof(bits));
    }
    return h;
}

// Audit dump: CSV with columns t, beta, alpha, alpha_bar, beta_tilde.
inline void dump_schedule_csv(const VarianceSchedule& s, std::ostream& out) {
    out << "t,beta,alpha,alpha_bar,beta_tilde\n";
    out.precision(17);
    for (int t = 1; t <= s.T; ++t) {
        out << t << ',' << s.beta[t - 1] << ',' << s.alpha[t - 1] << ','
            << s.alpha_bar[t - 1] << ',' << s.beta_tilde[t - 1] << '\n';
    }
}

}  // namespace demorph
