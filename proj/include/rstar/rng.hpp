#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rstar/math.hpp"

namespace rstar {

// splitmix64; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derive the seed of a sub-stream (chain, tree, replicate, ...) from a parent
// seed and a salt. Identical (seed, salt) always gives the same sub-seed, so
// parallel consumers can be scheduled in any order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    return splitmix64(s);
}

// xoshiro256** with hand-rolled distributions. The standard library engines
// are portable but its distributions are implementation-defined; everything
// downstream needs bit-reproducible draws per seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
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

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). floor(u53*n); bias < n/2^53.
    std::int64_t uniform_int(std::int64_t n) {
        return static_cast<std::int64_t>(uniform() * static_cast<double>(n));
    }

    /// Standard normal via inverse CDF (one draw per variate, no cached spare).
    double normal() {
        double u = uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        return normal_quantile(u);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Standard Cauchy via inverse CDF.
    double cauchy() { return std::tan(pi() * (uniform() - 0.5)); }

    /// Gamma(shape, rate), Marsaglia-Tsang; shape < 1 via the boost trick.
    double gamma(double shape, double rate) {
        if (shape <= 0.0 || rate <= 0.0) throw std::invalid_argument("gamma: shape and rate must be > 0");
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0, 1.0);
            double u = uniform();
            if (u <= 0.0) u = 0x1.0p-53;
            return g * std::pow(u, 1.0 / shape) / rate;
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
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
        }
    }

    double chi_squared(double dof) { return gamma(0.5 * dof, 0.5); }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    std::vector<double> dirichlet(const std::vector<double>& alpha) {
        std::vector<double> out(alpha.size());
        double total = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) total += out[i] = gamma(alpha[i], 1.0);
        for (auto& v : out) v /= total;
        return out;
    }

    /// Index draw from a probability simplex by CDF inversion.
    int categorical(const double* p, int n) {
        const double u = uniform();
        double acc = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            acc += p[i];
            if (u < acc) return i;
        }
        return n - 1;
    }

    /// k distinct indices from [0, n), ascending. Partial Fisher-Yates.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < k; ++i) {
            const auto j = i + uniform_int(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

}  // namespace rstar
