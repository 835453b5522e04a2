#pragma once

#include <cstdint>
#include <random>

namespace slicedssm {

/// Mixes a root seed with a stream index (splitmix64 finalizer). Every
/// independent task (chain, rolling window, replicate) gets its own stream.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

/// Seeded random source shared by all samplers. Not thread-safe; give each
/// thread its own instance.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

    /// Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }

    /// Gamma(shape, scale = 1).
    double gamma(double shape) {
        std::gamma_distribution<double> dist(shape, 1.0);
        return dist(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace slicedssm
