#pragma once

#include "bundlemart/sections.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace bundlemart {

enum class CouplingMethod { Reflection, Synchronous, Independent };
std::string to_string(CouplingMethod m);
CouplingMethod coupling_method_from_string(const std::string& s);

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct CoupledPair {
    SamplePath x;
    SamplePath y;
    /// First grid time at which the pair merged; kNever if it did not within the horizon.
    double coupling_time = kNever;
    CouplingMethod method = CouplingMethod::Reflection;
};

struct CoalescedPath {
    CoupledPair pair;
    /// Y up to the coupling time, X (same points) afterwards.
    SamplePath y_bar;
};

/// 2 sqrt(dim dt).
double default_merge_radius(int dim, double dt);

/// Riemannian distance for the manifolds with a coupling construction (spheres, torus, circle, R^n).
double coupling_distance(const ChartedManifold& m, const PointRef& a, const PointRef& b);

/// Pairs of g-Brownian motions on the same grid.
/// reflection: spheres use the mirror map of the embedding (reflection across the perpendicular
/// bisector of the chord X - Y), which is defined for antipodal points too; periodic coordinates
/// are reflected one by one and merge separately; R^n reflects across the bisector of X - Y.
/// synchronous: Y receives X's Gaussian increment in its own orthonormal frame.
/// independent: Y has its own stream.
/// Merging happens when the distance drops to merge_radius (<= 0 selects the default) or the gap
/// changes sign between grid points; Y is then placed on X and both share increments. Reflected
/// pairs also merge when a Brownian bridge of the gap would have hit zero between grid points.
/// Gluing at a positive radius moves Y towards X and biases Y's law by O(radius); a tiny radius
/// with the bridge test gives the continuous-time law on the grid in flat space.
std::vector<CoupledPair> couple_brownian(const ChartedManifold& m, const PointRef& x0, const PointRef& y0,
                                         double horizon, double dt, int n_pairs, CouplingMethod method,
                                         std::uint64_t seed, double merge_radius = 0.0);

CoalescedPath coalesce(const CoupledPair& pair);

/// Fraction of pairs coupled by time t.
double coupling_probability(const std::vector<CoupledPair>& pairs, double t);

struct NonconfluenceRow {
    std::string construction;
    double max_deviation = 0.0;  // max over pairs and times of |X_t - Y_t|, for X_T = Y_T constructions
    bool terminal_equal = true;
    /// distinct-start construction: max_t E|X_t - Y_t| - E|X_T - Y_T| (submartingale bound, <= 3 SE)
    double bound_excess = 0.0;
    bool passed = false;
};

struct NonconfluenceReport {
    std::vector<NonconfluenceRow> rows;
    bool passed() const;
};

/// max |X_t - Y_t| of two flat paths that agree at the end; throws InvalidArgument otherwise.
double confluent_pair_deviation(const SamplePath& x, const SamplePath& y, double tolerance = 1e-12);

/// Flat R^2 martingale pairs: identical, rebuilt backwards from a common endpoint with shared
/// increments, and distinct starts (submartingale bound on |X - Y|).
NonconfluenceReport nonconfluence_flat_check(int n_pairs, double horizon, double dt, std::uint64_t seed);

struct FamilyMember {
    std::string label;
    double parameter = 0.0;
    Section section;
};

struct LiouvilleOptions {
    PointRef x0;
    double horizon = 1.0;
    double dt = 1e-2;
    int n_paths = 1000;
    std::uint64_t seed = 1;
    double resolution = kDefaultResolution;
    double fd_step = kDefaultFdStep;
    bool predict_drift = true;
    /// Coupled base pairs for the fiber-gap diagnostic (0 disables it).
    int diagnostic_pairs = 50;
};

struct LiouvilleRow {
    std::string label;
    double parameter = 0.0;
    std::vector<DriftVerdict> verdicts;
    Decision decision = Decision::Inconclusive;
    std::vector<double> predicted_drift;
    /// RMS deviation of F_sigma from its mean over 100 sampled frames.
    double lift_dispersion = 0.0;
};

struct FiberGapSample {
    double time = 0.0;
    double coupled_fraction = 0.0;
    /// Mean fiber distance between the horizontal lifts of coupled base paths (same start angle),
    /// over pairs already coupled; NaN when none are.
    double mean_fiber_gap = 0.0;
};

struct LiouvilleReport {
    std::string bundle;
    std::vector<LiouvilleRow> rows;
    std::vector<FiberGapSample> coupling_diagnostic;
    std::vector<std::string> harmonic_consistent() const;
};

/// Vertical martingale test of every family member on one shared base ensemble, plus diagnostics.
LiouvilleReport liouville_experiment(const AssociatedPtr& bundle, const std::vector<FamilyMember>& family,
                                     const LiouvilleOptions& options);

}  // namespace bundlemart
