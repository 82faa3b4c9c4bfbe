#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace deepalign {

// Seeded random stream. All sampling goes through the methods below instead
// of <random> distributions, whose output is implementation-defined; this
// keeps generated artifacts reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: empty range");
        std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    // Uniform integer in [lo, hi] inclusive.
    long uniform_int(long lo, long hi) {
        return lo + static_cast<long>(uniform_index(static_cast<std::size_t>(hi - lo + 1)));
    }

    // Index drawn from an unnormalized weight vector.
    std::size_t discrete(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw std::invalid_argument("discrete: no positive weight");
        double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent stream for a sub-task, detached from this stream's state.
    Rng split(std::uint64_t salt) {
        std::uint64_t s = next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL);
        return Rng(s);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace deepalign
