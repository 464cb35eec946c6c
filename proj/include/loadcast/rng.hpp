#ifndef LOADCAST_RNG_HPP
#define LOADCAST_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace loadcast {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG. All distributions are hand-rolled on top of the
// mt19937_64 output stream, which the standard pins bit-exactly, so a
// fixed seed reproduces byte-identical artifacts on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Independent stream for worker `stream` of a run seeded with `seed`.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix_seed(seed, stream));
    }

    static std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
        return splitmix64(s);
    }

    std::uint64_t next_u64() { return eng_(); }

    // Unbiased integer in [0, bound) via rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x > limit);
        return x % bound;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi) - lo + 1));
    }

    double uniform_real(double lo, double hi) {
        const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace loadcast

#endif
