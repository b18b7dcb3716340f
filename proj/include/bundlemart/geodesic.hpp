#pragma once

#include "bundlemart/path_types.hpp"

#include <functional>

namespace bundlemart {

struct GeodesicEnd {
    PointRef point;
    Vec velocity;
};

/// Integrates x'' + Gamma(x', x') = 0 from (p, v) for parameter time t_final with n_steps
/// classical RK4 steps, switching charts when the safety region is left.
GeodesicEnd integrate_geodesic(const ChartedManifold& m, const PointRef& p, const Vec& v, double t_final, int n_steps);

/// Unit-speed geodesic from p in direction v, sampled every `step` of arclength up to `length`.
/// The time grid of the result is arclength. Zero length or zero v returns the start point only.
SamplePath geodesic_shoot(const ChartedManifold& m, const PointRef& p, const Vec& v, double length, double step);

struct DistanceOptions {
    double tolerance = 1e-10;  // coordinate miss of the shot endpoint
    int max_iterations = 60;
    int steps = 400;           // RK4 steps per shot
};

struct DistanceResult {
    double distance = 0.0;
    bool converged = false;
    double miss = 0.0;
    int iterations = 0;
    Vec initial_velocity;
};

/// Riemannian distance by Newton shooting on the exponential map from p; the length of the
/// connecting geodesic is returned. Non-convergence is reported through `converged`.
DistanceResult distance_estimate(const ChartedManifold& m, const PointRef& p, const PointRef& q,
                                 const DistanceOptions& options = {});

/// Length of a coordinate curve t -> c(t) in one chart over [t0, t1]: composite Simpson rule on
/// the speed, velocity by central differences.
double curve_length(const ChartedManifold& m, ChartId chart, const std::function<Vec(double)>& curve, double t0,
                    double t1, int intervals = 2000);

}  // namespace bundlemart
