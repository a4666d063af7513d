#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace bdre {

/// Identifies one reproducible random sequence. Ensembles use
/// stream_index = replication index, so results do not depend on how the
/// replications are split across threads.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_index = 0;

    [[nodiscard]] RngStream substream(std::uint64_t index) const {
        return RngStream{seed, stream_index * 0x100000001B3ULL + index + 1};
    }
    friend bool operator==(const RngStream&, const RngStream&) = default;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator;
/// the state is seeded from (seed, stream_index) through a splitmix64 chain,
/// which is cheap enough to build one engine per path.
class Engine {
public:
    using result_type = std::uint64_t;

    explicit Engine(RngStream stream) {
        std::uint64_t key =
            detail::mix64(stream.seed ^ detail::mix64(stream.stream_index ^ 0xD1B54A32D192ED03ULL));
        for (auto& word : state_) {
            key += 0x9E3779B97F4A7C15ULL;
            word = detail::mix64(key);
        }
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on (0, 1), never exactly 0.
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_{};
};

/// Standard normal variates (ziggurat) drawn from an Engine.
class NormalSource {
public:
    explicit NormalSource(RngStream stream) : engine_(stream) {}

    double operator()() { return normal_(engine_); }
    Engine& engine() { return engine_; }

private:
    Engine engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bdre
