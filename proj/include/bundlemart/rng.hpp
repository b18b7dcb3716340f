#pragma once

#include "bundlemart/linalg.hpp"

#include <cstdint>
#include <random>

namespace bundlemart {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of an independent stream, derived from (master seed, index, salt) by a counter-based mix,
/// so the stream of path i never depends on how paths are scheduled.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index, std::uint64_t salt = 0);

class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next() { return normal_(engine_); }

    Vec next(int dim) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = normal_(engine_);
        return v;
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bundlemart
