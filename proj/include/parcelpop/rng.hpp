#pragma once

#include <cstdint>
#include <initializer_list>

namespace parcelpop {

// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Hash an ordered tuple of words into one stream key.
constexpr std::uint64_t stream_key(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto w : words) h = mix64(h ^ mix64(w));
    return h;
}

// Map 64 random bits to the open interval (0, 1).
constexpr double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based stream: the n-th draw depends only on (key, n), so any
// number of streams can be evaluated in any order or on any thread.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }

    // Uniform in (0, 1); never returns 0 or 1.
    double uniform() { return to_open_unit((*this)()); }

    // Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

inline std::int64_t CounterRng::uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>((*this)());
    // Lemire-style multiply; bias is < span / 2^64 and irrelevant here.
    const unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * span;
    return lo + static_cast<std::int64_t>(m >> 64);
}

} // namespace parcelpop
