#pragma once

#include <cstdint>
#include <limits>

namespace epicurve {

/**
 * Counter-based random stream.
 *
 * Output n is a SplitMix64 finalization of key + n * golden gamma, so a stream is fully
 * described by (key, counter). split(id) derives an independent child key from the parent
 * key and the id alone, which makes replicate i of an experiment depend only on the master
 * seed and i. Satisfies UniformRandomBitGenerator, so Boost.Random distributions accept it.
 */
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        ++counter_;
        return mix(key_ + counter_ * kGamma);
    }

    /// Child stream for sub-task `id`; does not advance this stream.
    RandomStream split(std::uint64_t id) const {
        RandomStream child;
        child.key_ = mix(key_ ^ mix(id + 0xbb67ae8584caa73bULL));
        return child;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe as the argument of log.
    double uniform_open01() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer on [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // Lemire's multiply-shift with rejection
        std::uint64_t x = (*this)();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    std::uint64_t counter() const { return counter_; }

private:
    RandomStream() = default;

    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace epicurve
