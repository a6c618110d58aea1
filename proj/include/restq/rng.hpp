#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace restq {

// Deterministic RNG. std::mt19937_64 has a standardized output sequence, but
// the std distribution adaptors do not, so draws are derived here directly
// from raw engine output. Identical seeds produce identical draw sequences on
// every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi <= lo) return lo;
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(bounded(span));
    }

    // Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        if (n <= 1) return 0;
        return static_cast<std::size_t>(bounded(static_cast<std::uint64_t>(n)));
    }

    bool coin(double p) { return uniform() < p; }

    char pick_char(const std::string& alphabet) {
        return alphabet[index(alphabet.size())];
    }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[index(items.size())];
    }

    // Derive an independent child seed; advances this engine once.
    std::uint64_t fork_seed() { return next_u64() ^ 0x9e3779b97f4a7c15ULL; }

private:
    // Debiased multiply-shift bound (rejection sampling on the low product).
    std::uint64_t bounded(std::uint64_t n) {
        unsigned __int128 m;
        std::uint64_t l;
        do {
            m = static_cast<unsigned __int128>(next_u64()) * n;
            l = static_cast<std::uint64_t>(m);
        } while (l < (0ULL - n) % n);
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::mt19937_64 engine_;
};

// FNV-1a, used wherever a hash must be stable across runs and platforms.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace restq
