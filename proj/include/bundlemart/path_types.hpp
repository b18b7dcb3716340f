#pragma once

#include "bundlemart/manifold.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bundlemart {

/// Time-discretized manifold-valued path. Consecutive states are related by a step taken in
/// the chart of the earlier state, so state k+1 can always be expressed in the chart of state k.
struct SamplePath {
    std::vector<double> time;
    std::vector<PointRef> states;

    std::size_t size() const noexcept { return states.size(); }
    double horizon() const { return time.empty() ? 0.0 : time.back(); }
    std::vector<ChartId> chart_log() const;
    /// Throws InvalidArgument when the grid is not strictly increasing or lengths mismatch.
    void validate() const;
};

struct PathEnsemble {
    std::vector<SamplePath> paths;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::string generator_tag;
};

/// Real-valued process on a time grid, e.g. a running stochastic integral.
struct RealPath {
    std::vector<double> time;
    std::vector<double> values;

    double terminal() const { return values.empty() ? 0.0 : values.back(); }
};

}  // namespace bundlemart
