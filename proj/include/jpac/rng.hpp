#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace jpac {

/// SplitMix64 finalizer. Used to fold stream identifiers into Philox keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Counter-based random stream (Philox4x32-10).
 *
 * A stream is identified by a 64-bit key; the output is a pure function of
 * (key, counter), so child streams obtained with split() are independent of
 * the order in which they are consumed. This is what makes Monte-Carlo runs
 * reproducible regardless of how work is scheduled across threads.
 *
 * Normal variates use Box-Muller on our own uniforms rather than
 * std::normal_distribution, whose algorithm is implementation-defined.
 */
class RandomStream
{
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed) noexcept : key_(mix64(seed)) {}

    RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
        : key_(mix64(seed))
    {
        for (auto id : path) key_ = mix64(key_ ^ mix64(id + 0x632be59bd9b4e019ULL));
    }

    /// Child stream; depends only on this stream's key and `id`.
    RandomStream split(std::uint64_t id) const noexcept
    {
        RandomStream child(0);
        child.key_ = mix64(key_ ^ mix64(id + 0x632be59bd9b4e019ULL));
        return child;
    }

    std::uint64_t key() const noexcept { return key_; }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        if (pos_ == 2) refill();
        return buffer_[pos_++];
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    void refill() noexcept
    {
        std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_),
                                         static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
        std::array<std::uint32_t, 2> k{static_cast<std::uint32_t>(key_),
                                       static_cast<std::uint32_t>(key_ >> 32)};
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        buffer_[0] = (std::uint64_t{ctr[0]} << 32) | ctr[1];
        buffer_[1] = (std::uint64_t{ctr[2]} << 32) | ctr[3];
        ++counter_;
        pos_ = 0;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int pos_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace jpac
