#pragma once

#include "bundlemart/manifold.hpp"

#include <random>

namespace testing_support {

inline bundlemart::Vec random_vec(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    bundlemart::Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

/// Uniform point of the disc |x| < radius.
inline bundlemart::Vec random_in_ball(std::mt19937_64& rng, int n, double radius) {
    bundlemart::Vec v;
    do {
        v = random_vec(rng, n, -radius, radius);
    } while (v.norm() >= radius);
    return v;
}

}  // namespace testing_support
