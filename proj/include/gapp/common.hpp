#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace gapp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// log N(x | mean, var), var > 0
inline double norm_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

inline double log_sum_exp(std::span<const double> logs) {
    double m = kNegInf;
    for (double v : logs) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : logs) s += std::exp(v - m);
    return m + std::log(s);
}

inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// ---------------------------------------------------------------------------
// Deterministic RNG substreams. One master seed spawns an independent,
// replayable stream per (step, slot) so the per-particle loop can run on any
// number of threads with bit-identical output.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b + 0x9e3779b97f4a7c15ULL));
}

// xoshiro256** — small, fast, stable across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x = splitmix64(x);
            w = x;
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double var) { return mean + std::sqrt(var) * normal(); }

    // Knuth multiplication method; adequate for the rates used here (< ~50).
    int poisson(double rate) {
        if (rate <= 0.0) return 0;
        const double limit = std::exp(-rate);
        double p = 1.0;
        int n = -1;
        do {
            ++n;
            p *= uniform();
        } while (p > limit);
        return n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    int uniform_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }

    // index sampled proportionally to exp(logw); returns -1 when all -inf
    int categorical_log(std::span<const double> logw) {
        double m = kNegInf;
        for (double v : logw) m = std::max(m, v);
        if (!std::isfinite(m)) return -1;
        double total = 0.0;
        for (double v : logw) total += std::exp(v - m);
        const double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < logw.size(); ++i) {
            acc += std::exp(logw[i] - m);
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(logw.size()) - 1;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline Rng substream(std::uint64_t master, std::uint64_t step, std::uint64_t slot) {
    return Rng(mix_seed(mix_seed(master, step), slot));
}

// Parallel map over [0, n). Work items must not share mutable state.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace gapp
