#pragma once

#include <cstdint>
#include <string_view>

namespace avgrl {

// Counter-based pseudo-random generator: the SplitMix64 finalizer evaluated
// at key + i*GOLDEN for i = 1, 2, ...  Stateless apart from the counter, so
// the i-th draw of a stream is a pure function of (key, i).  Streams for
// independent components (mdp-gen, injector, trajectory, td, ...) are derived
// from a master seed and a label so that runs are reproducible and components
// never share a sequence.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t fnv1a64(std::string_view s) {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    /// Independent stream for a named component.
    CounterRng stream(std::string_view label) const {
        return CounterRng(mix64(key_ ^ fnv1a64(label)));
    }

    /// Independent numbered substream (per-iteration, per-seed, ...).
    CounterRng substream(std::uint64_t n) const {
        return CounterRng(mix64(key_ ^ mix64(n)));
    }

    std::uint64_t next_u64() { return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1) (never exactly 0; safe for logs).
    double next_double_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n) via Lemire multiply-shift.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal (Box-Muller; consumes two draws).
    double next_normal();

    /// Gamma(alpha, 1) via Marsaglia-Tsang squeeze.
    double next_gamma(double alpha);

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace avgrl
