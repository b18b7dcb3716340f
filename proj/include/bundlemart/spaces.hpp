#pragma once

#include "bundlemart/manifold.hpp"

#include <memory>

namespace bundlemart {

using ManifoldPtr = std::shared_ptr<const ChartedManifold>;

inline constexpr ChartId kNorth = 0;
inline constexpr ChartId kSouth = 1;
inline constexpr ChartId kCover = 0;
inline constexpr ChartId kFundamental = 1;

/// Euclidean R^n, one global chart, closed-form zero connection.
ManifoldPtr make_flat(int n);

/// Round n-sphere of the given radius with two stereographic charts.
/// north: x = X/(R + X_{n+1}) for X on the embedded sphere, so g = 4R^2/(1+|x|^2)^2 delta.
/// south: same formula from the other pole with the last coordinate flipped, so the
/// transition is x -> x~/|x|^2 (x~ = x with its last entry negated) and is orientation preserving.
/// Domain |x| < 10, safety region |x| < 1.5.
ManifoldPtr make_sphere(int n, double radius = 1.0);

/// Flat torus R^2 / (2 pi Z)^2: chart "cover" (all of R^2, never left) and chart "fundamental"
/// ([0, 2 pi)^2); cover -> fundamental wraps coordinates.
ManifoldPtr make_torus();

/// Unit circle as U(1): same two charts as the torus in dimension 1.
ManifoldPtr make_circle();

/// Radius of a sphere built by make_sphere (from the metric at the chart origin).
double sphere_radius(const ChartedManifold& m);

/// Embedding of a sphere point into R^{n+1}.
Vec sphere_embed(const ChartedManifold& m, const PointRef& p);
/// d(embedding)/d(coords), (n+1) x n.
Mat sphere_embed_jacobian(const ChartedManifold& m, const PointRef& p);
/// Chart point of an embedded point (north chart when X_{n+1} >= 0).
PointRef sphere_point(const ChartedManifold& m, const Vec& embedded);

/// Wrap an angle into [0, 2 pi).
double wrap_angle(double a);
/// Wrap into (-pi, pi].
double wrap_signed(double a);

/// Conformal Levi-Civita coefficients for g = e^{2 f} delta given grad f.
Christoffel conformal_christoffel(const Vec& grad_f);

}  // namespace bundlemart
