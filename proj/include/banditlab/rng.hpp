#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace banditlab {

// splitmix64 finalizer; also used to hash stream keys together.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_str(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Small counter-based generator. Every consumer derives its own stream from
// (seed, key...) so results do not depend on scheduling or thread count.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : state_(mix64(seed ^ 0x2545f4914f6cdd1dULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // uniform in (0,1)
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, no cached spare so draw counts stay predictable.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    std::uint64_t state() const { return state_; }

    Rng derive(std::uint64_t key) const { return Rng(mix64(state_ ^ mix64(key))); }
    Rng derive(const std::string& key) const { return derive(hash_str(key)); }
    Rng derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }

  private:
    std::uint64_t state_;
};

}  // namespace banditlab
