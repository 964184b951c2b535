#pragma once

// Seeded random stream. Every simulator owns its own Rng so that runs are
// reproducible independently of scheduling; independent child streams are
// made by hashing the base seed with deriveSeed rather than by jumping.

#include <cstdint>
#include <random>

namespace signdyn {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return unif_(eng_); }   // [0,1)
    double normal() { return normal_(eng_); }  // N(0,1)

    double gamma(double shape, double scale) {
        std::gamma_distribution<double> g(shape, scale);
        return g(eng_);
    }

private:
    std::mt19937_64 eng_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace signdyn
