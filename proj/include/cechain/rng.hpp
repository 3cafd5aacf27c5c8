#ifndef CECHAIN_RNG_HPP
#define CECHAIN_RNG_HPP

#include <cstdint>

namespace cechain {

// splitmix64: tiny, fast, and identical on every platform.  All randomness
// in the library goes through this so that a seed fully determines a run.
inline std::uint64_t splitmix64(std::uint64_t& state)
{
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t s = a ^ (b * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64(state_); }

    // uniform in [0, n)
    std::uint64_t below(std::uint64_t n)
    {
        // modulo bias is irrelevant at the magnitudes used here
        return n ? next() % n : 0;
    }

    // uniform in [lo, hi] inclusive
    long long range(long long lo, long long hi)
    {
        return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // uniform in [0, 1)
    double real()
    {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
    }

    // index drawn from non-negative weights
    std::size_t weighted(const double* w, std::size_t n)
    {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i)
            total += w[i];
        double x = real() * total;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            x -= w[i];
            if (x < 0)
                return i;
        }
        return n - 1;
    }

private:
    std::uint64_t state_;
};

} // namespace cechain

#endif
