#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace npmerge {

// Deterministic PRNG: xoshiro256++ seeded through splitmix64. The algorithm
// is fixed so that checkpoints and splits reproduce byte-for-byte on any
// platform. Single-owner by convention: pass by reference, never share.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    double uniform();                           // [0, 1), 53-bit
    double uniform(double lo, double hi);
    std::int64_t uniform_int(std::int64_t n);   // [0, n), rejection-sampled

    double normal();                            // standard normal, Box-Muller
    double gamma(double alpha);                 // shape alpha > 0, scale 1
    std::vector<double> dirichlet(const std::vector<double>& alphas);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
            const std::int64_t j = uniform_int(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

    std::array<std::uint64_t, 4> state() const { return s_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

private:
    std::array<std::uint64_t, 4> s_{};
};

// Splitmix-style combine for deriving independent sub-seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace npmerge
