#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace flsim {

// Source of uniform variates in [0, 1). Every stochastic operation draws
// through this interface so tests can script exact values.
class RandomStream {
public:
    virtual ~RandomStream() = default;

    virtual double next_uniform() = 0;

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

    // Box-Muller on two uniforms; the spare variate is cached.
    double normal(double mean, double sigma);

    bool bernoulli(double p) { return next_uniform() < p; }

private:
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// 64-bit Mersenne twister mapped to 53-bit doubles. Portable across standard
// libraries, unlike std::uniform_real_distribution.
class SeededStream final : public RandomStream {
public:
    explicit SeededStream(std::uint64_t seed) : engine_(seed) {}

    double next_uniform() override;

private:
    std::mt19937_64 engine_;
};

// Replays a fixed list of uniforms, cycling when exhausted.
class ScriptedStream final : public RandomStream {
public:
    explicit ScriptedStream(std::vector<double> values) : values_(std::move(values)) {}

    double next_uniform() override;

    std::size_t consumed() const { return consumed_; }

private:
    std::vector<double> values_;
    std::size_t consumed_ = 0;
};

// Derives an independent stream seed from a run seed and a (actor, purpose)
// pair using splitmix64 finalisation.
std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t actor, std::uint64_t purpose);

}  // namespace flsim
