#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace proto_rmdp {

// SplitMix64 step; used only to expand seeds and derive child streams.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Explicitly seeded random stream.  Every stochastic routine takes one of
// these by reference; there is no global generator.  fork(tag) derives an
// independent child stream from the *original* seed and the tag, so the
// numbers a consumer sees do not depend on how much the parent stream has
// already been used or on worker scheduling.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        std::seed_seq seq{splitmix64(x), splitmix64(x), splitmix64(x), splitmix64(x)};
        engine_.seed(seq);
    }

    Rng fork(std::uint64_t tag) const {
        std::uint64_t x = seed_ ^ (0xd1342543de82ef95ULL * (tag + 1));
        return Rng(splitmix64(x));
    }

    std::uint64_t next_u64() { return engine_(); }

    // uniform double in [0, 1); 53-bit mantissa, pinned to the raw output so
    // results are identical across standard libraries
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    int uniform_int(int n) {
        return static_cast<int>(static_cast<double>(n) * uniform());
    }

    // index drawn from an (unnormalized is not allowed) probability vector,
    // by inverse-CDF scan; the final index absorbs rounding slack
    int categorical(std::span<const double> probs) {
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace proto_rmdp
