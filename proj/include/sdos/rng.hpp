#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sdos {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ull));
}

}  // namespace detail

// Deterministic random stream identified by (master_seed, stream_index).
// The same pair yields the same draw sequence on every platform: the engine
// is mt19937_64 (bit-exact per the standard) and all distributions below are
// implemented here rather than taken from <random>, whose distributions are
// implementation-defined.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : seed_(master_seed), index_(stream_index), engine_(detail::mix_seed(master_seed, stream_index)) {}

    // Independent stream derived from this stream's identity. Roles within one
    // computation get distinct indices; the parent's draw position is irrelevant.
    RngStream split(std::uint64_t role) const {
        return RngStream(detail::mix_seed(seed_, index_), role);
    }

    std::uint64_t master_seed() const { return seed_; }
    std::uint64_t stream_index() const { return index_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1].
    double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

    double uniform_range(double a, double b) { return a + (b - a) * uniform(); }

    // Standard normal via Box-Muller, spare value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    // Marsaglia-Tsang; shape < 1 handled by boosting.
    double gamma(double shape, double rate) {
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
                return d * v / rate;
            }
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Counts here are small (hundreds at most), so direct summation is fine.
    int binomial(int n, double p) {
        int k = 0;
        for (int i = 0; i < n; ++i) {
            if (uniform() < p) ++k;
        }
        return k;
    }

  private:
    std::uint64_t seed_;
    std::uint64_t index_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sdos
