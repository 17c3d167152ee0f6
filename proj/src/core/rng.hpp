#pragma once
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace amfm {

// Sub-seed derivation: every randomized stage gets mix_seed(seed, stage_name)
// so one CLI --seed drives the whole run. splitmix64 over (seed XOR FNV-1a(stage)).
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view stage) {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a 64
    for (unsigned char c : stage) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled distributions: std:: distributions are not
// pinned across library versions, these are.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    double uniform() { // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // [0, n), unbiased via rejection
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= lim);
        return v % n;
    }

    double normal() { // Box-Muller, one value per call (spare cached)
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) { // Fisher-Yates
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace amfm
