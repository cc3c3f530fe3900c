#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace bnbpfa {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    return splitmix64(x);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

/**
 * Seeded xoshiro256** generator with keyed substreams.
 *
 * A stream is identified by a 64-bit key. `derive(label, index)` returns a
 * fresh stream whose key is a hash of (key, label, index); it depends only on
 * the parent key, never on how many values the parent has produced, so
 * per-index substreams give the same draws whatever order or thread they are
 * consumed in.
 *
 * Satisfies UniformRandomBitGenerator, so std:: distributions accept it.
 * Single-owner: never share one stream across threads.
 */
class RngStream {
  public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0) noexcept : key_(seed) {
        std::uint64_t sm = seed;
        for (auto& s : state_) s = detail::splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform double on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    RngStream derive(std::string_view label, std::uint64_t index = 0) const noexcept {
        std::uint64_t k = detail::mix64(key_ ^ detail::fnv1a(label));
        k = detail::mix64(k ^ detail::mix64(index + 0x632be59bd9b4e019ULL));
        return RngStream(k);
    }

    std::uint64_t key() const noexcept { return key_; }

    friend bool operator==(const RngStream&, const RngStream&) = default;

  private:
    std::uint64_t key_;
    std::array<std::uint64_t, 4> state_{};
};

} // namespace bnbpfa
