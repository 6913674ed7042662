#pragma once
// Counter-mode random streams.  Every (master seed, path, mode) triple owns
// an independent stream; output j of a stream is a fixed mixing function of
// (stream key, j), so draws never depend on scheduling or worker count.
//
// Stream layout used by the integrator: step n of a mode consumes the two
// uniforms at counters 2n and 2n+1.  Reproducibility is promised within a
// build, not bit-exactly across compilers or platforms.

#include <cstdint>

namespace spde::rng {

/// SplitMix64 finalizer; also used as the output mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives the stream key for a (master, path, mode) triple.
inline std::uint64_t stream_key(std::uint64_t master, std::uint64_t path, std::uint64_t mode) {
    std::uint64_t k = mix64(master);
    k = mix64(k ^ (0xA24BAED4963EE407ULL + path));
    k = mix64(k ^ (0x9FB21C651E98DF25ULL + mode));
    return k;
}

/// Keyed counter stream: output(j) = mix64(key ^ mix64(j)).
class Stream {
public:
    Stream() = default;
    Stream(std::uint64_t master, std::uint64_t path, std::uint64_t mode)
        : key_(stream_key(master, path, mode)) {}
    explicit Stream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

    /// Uniform on the open interval (0, 1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    void jump_to(std::uint64_t counter) { counter_ = counter; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace spde::rng
