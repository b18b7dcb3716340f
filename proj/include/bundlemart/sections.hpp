#pragma once

#include "bundlemart/bundles.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bundlemart {

/// Fiber coordinates nu of a section over a base point given in a chart.
using FiberFn = std::function<Vec(ChartId, const Vec&)>;

/// A section of an associated bundle, given chart by chart in fiber coordinates. The chart
/// descriptions must agree under the bundle transitions.
struct Section {
    std::string name;
    AssociatedPtr bundle;
    FiberFn fiber;

    PointRef at(const PointRef& x) const { return bundle->point(x, fiber(x.chart, x.x)); }
};

inline constexpr double kDefaultFdStep = 1e-3;

/// F_sigma(p) = mu_p^{-1}(sigma(pi(p))), in N = R^r.
Vec equivariant_lift(const Section& s, const PointRef& p);

struct TensionReport {
    PointRef point;
    /// Full E-coordinate tension tau^A of sigma (base point reports) or empty.
    Vec tension;
    /// theta^alpha(tau): vertical tension in the adapted vertical coframe.
    Vec vertical;
    /// sum_i beta_F(H e_i, H e_i) at a P point (horizontal reports) or empty.
    Vec horizontal;
    double fd_step = kDefaultFdStep;
    /// |value(h) - value(h/2)|.
    double estimated_error = 0.0;
};

/// tau^A = g^{jk}(d_j d_k sigma^A - Gamma_M^i_{jk} d_i sigma^A + Gamma_E^A_{BC} d_j sigma^B d_k sigma^C)
/// by central differences at x, and its vertical part.
TensionReport vertical_tension(const Section& s, const PointRef& x, double fd_step = kDefaultFdStep);
/// theta^alpha(tau) only, at one step (no error estimate).
Vec vertical_tension_components(const Section& s, const PointRef& x, double fd_step = kDefaultFdStep);

/// Trace of the second fundamental form of F_sigma over horizontal lifts of a g-orthonormal base
/// frame, as second differences along horizontal lifts of base geodesics through p.
TensionReport horizontal_tension(const Section& s, const PointRef& p, double fd_step = kDefaultFdStep);

/// rho(-v) L(x)^{-1} w: fiber coordinates of a vertical vector at sigma(pi p) read in the frame p.
Vec frame_components(const AssociatedBundle& e, const PointRef& p, const Vec& vertical);

/// Running Ito integrals of theta^alpha along sigma(B), one row per form: result[alpha][path].
std::vector<std::vector<RealPath>> vertical_integrals(const Section& s, const PathEnsemble& base);

/// Drift verdicts of the vertical forms along sigma(B); the section is harmonic-consistent iff all are
/// martingale-consistent.
std::vector<DriftVerdict> vertical_martingale_test(const Section& s, const PathEnsemble& base,
                                                   double resolution = kDefaultResolution);

/// Expected drift per unit time of each vertical integral, 1/2 theta(tau) averaged along the paths
/// (every `stride`-th grid point).
std::vector<double> predicted_vertical_drift(const Section& s, const PathEnsemble& base, int stride = 5,
                                             double fd_step = kDefaultFdStep);

/// F_sigma along the horizontal lifts of the base paths (fiber angle v0 at the start).
std::vector<std::vector<Vec>> lifted_values(const Section& s, const PathEnsemble& base, double v0 = 0.0);

/// Drift verdicts of the coordinate forms d xi^alpha on N along F_sigma(B^h).
std::vector<DriftVerdict> horizontally_harmonic_test(const Section& s, const PathEnsemble& base,
                                                     double resolution = kDefaultResolution, double v0 = 0.0);

struct FiberMartingaleResult {
    std::vector<DriftVerdict> vertical;  // int theta^alpha d X
    std::vector<DriftVerdict> fiber;     // int d xi^alpha of mu_Y^{-1} X
    Decision vertical_decision = Decision::Inconclusive;
    Decision fiber_decision = Decision::Inconclusive;
    bool agree() const { return vertical_decision == fiber_decision; }
};

/// Fiber processes xi_k in R^r: Brownian increments plus a constant drift vector.
std::vector<std::vector<Vec>> fiber_processes(int r, const PathEnsemble& grid_source, const Vec& xi0, const Vec& drift,
                                              std::uint64_t seed);

/// X = mu(Y, xi) for horizontal Y; tests X as a vertical semimartingale and mu_Y^{-1} X = xi as an
/// N-semimartingale.
FiberMartingaleResult fiber_martingale_check(const AssociatedBundle& e, const PathEnsemble& horizontal,
                            const std::vector<std::vector<Vec>>& xi, double resolution = kDefaultResolution);

/// max over sample points and a g-orthonormal basis of |v sigma_*(e_i)| in the fiber metric.
double parallelism_check(const Section& s, const std::vector<PointRef>& points, double fd_step = kDefaultFdStep);
/// max |d_i nu^alpha| over sample points (component constancy).
double component_gradient_max(const Section& s, const std::vector<PointRef>& points,
                              double fd_step = kDefaultFdStep);

/// Deterministic sample of base points inside the safe region of the first chart.
std::vector<PointRef> sample_points(const ChartedManifold& base, int count, std::uint64_t seed);
/// Same with a fiber angle appended (points of P).
std::vector<PointRef> sample_frames(const PrincipalBundle& p, int count, std::uint64_t seed);

Section zero_section(AssociatedPtr e);
/// Coordinate-constant fiber components in every chart (only consistent on the torus).
Section constant_section(AssociatedPtr e, const Vec& nu);
/// sin(x^1) d_1 on the torus.
Section torus_sin_section(AssociatedPtr e);
/// 0.5 sin(x^2) d_1 + 0.4 cos(x^1) d_2 on the torus.
Section torus_mixed_section(AssociatedPtr e);
/// c grad(height) on the unit S^2: nu = -c x in the north chart, +c y in the south chart.
Section sphere_height_gradient_section(AssociatedPtr e, double c);
/// Hopf associated bundle: nu = xi / sqrt(1+|x|^2) in the north chart and y xi / sqrt(1+|y|^2) in the
/// south chart (complex multiplication per C factor); equals xi at the north pole, 0 at the south pole.
Section hopf_tapered_section(AssociatedPtr e, const Vec& xi);

}  // namespace bundlemart
