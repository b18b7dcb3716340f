#pragma once

#include "bundlemart/path_types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace bundlemart {

using OneFormField = std::function<Vec(const PointRef&)>;
using BilinearField = std::function<Mat(const PointRef&)>;
using ConnectionField = std::function<Christoffel(const PointRef&)>;
using VectorField = std::function<Vec(const PointRef&)>;

enum class StepScheme { Euler, GeodesicRetraction };

std::string to_string(StepScheme s);
StepScheme step_scheme_from_string(const std::string& s);

struct BrownianOptions {
    StepScheme scheme = StepScheme::Euler;
    /// Optional deterministic drift added as drift(x) dt (coordinates of the current chart).
    VectorField drift;
    /// Salt mixed into per-path stream seeds, so independent ensembles can share a master seed.
    std::uint64_t salt = 0;
};

/// One step of g-Brownian motion from p driven by standard Gaussian increment dw ~ N(0, dt I).
PointRef brownian_step(const ChartedManifold& m, const PointRef& p, const Vec& dw, double dt,
                       const BrownianOptions& options = {});

int grid_steps(double horizon, double dt);

SamplePath simulate_brownian_path(const ChartedManifold& m, const PointRef& x0, double horizon, double dt,
                                  std::uint64_t stream, const BrownianOptions& options = {});

/// Ensemble of independent g-Brownian paths; path i uses stream_seed(seed, i, options.salt).
PathEnsemble simulate_brownian(const ChartedManifold& m, const PointRef& x0, double horizon, double dt, int n_paths,
                               std::uint64_t seed, const BrownianOptions& options = {});

/// Coordinates of `to` minus those of `from`, both in the chart of `from`.
Vec chart_increment(const ChartedManifold& m, const PointRef& from, const PointRef& to);

ConnectionField levi_civita(const ChartedManifold& m);
ConnectionField flat_connection(int dim);

/// Sum theta_i dX^i + 1/2 Gamma^i_{jk} theta_i dX^j dX^k, left-point evaluation.
/// Only the symmetric part of the connection enters.
RealPath ito_integral(const ChartedManifold& m, const OneFormField& theta, const SamplePath& path,
                      const ConnectionField& connection);

/// Sum b_ij dX^i dX^j, left-point evaluation.
RealPath quadratic_integral(const ChartedManifold& m, const BilinearField& b, const SamplePath& path);

/// Sum theta_i((X_k + X_{k+1})/2) dX^i, midpoint taken in the chart of X_k.
RealPath stratonovich_integral(const ChartedManifold& m, const OneFormField& theta, const SamplePath& path);

/// Same as stratonovich_integral with the trapezoid average of endpoint values.
RealPath trapezoid_integral(const ChartedManifold& m, const OneFormField& theta, const SamplePath& path);

/// A smooth map between two modeled manifolds.
struct ManifoldMap {
    const ChartedManifold* source = nullptr;
    const ChartedManifold* target = nullptr;
    std::function<PointRef(const PointRef&)> apply;
};

/// First and second coordinate derivatives of F at p, target coordinates in the chart of F(p).
struct MapJet {
    PointRef image;
    Mat jacobian;               // dF^a/dx^i
    std::vector<Mat> hessian;   // one matrix d2F^a/dx^j dx^k per target coordinate a
};

MapJet map_jet(const ManifoldMap& f, const PointRef& p, double fd_step = 1e-4);

/// beta_F^a_{jk} = d2F^a - Gamma_M^i_{jk} dF^a_i + Gamma_N^a_{bc} dF^b_j dF^c_k, one matrix per a.
std::vector<Mat> second_fundamental_form(const ManifoldMap& f, const PointRef& p, const ConnectionField& conn_m,
                                         const ConnectionField& conn_n, double fd_step = 1e-4);

/// Running terms of the geometric Ito formula along one path:
/// lhs = int theta d^N F(X), pullback = int F*theta d^M X, second_order = 1/2 int theta(beta_F)(dX, dX).
struct GeometricItoTerms {
    RealPath lhs;
    RealPath pullback;
    RealPath second_order;

    RealPath residual() const;
};

GeometricItoTerms geometric_ito_terms(const ManifoldMap& f, const OneFormField& theta, const SamplePath& path,
                                      const ConnectionField& conn_m, const ConnectionField& conn_n,
                                      double fd_step = 1e-4);

/// lhs - pullback - second_order; vanishes as dt -> 0.
RealPath geometric_ito_residual(const ManifoldMap& f, const OneFormField& theta, const SamplePath& path,
                                const ConnectionField& conn_m, const ConnectionField& conn_n, double fd_step = 1e-4);

enum class Decision { MartingaleConsistent, DriftDetected, Inconclusive };

std::string to_string(Decision d);

struct DriftVerdict {
    double drift_estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_paths = 0;
    double resolution = 0.02;
    Decision decision = Decision::Inconclusive;
    std::string label;
};

inline constexpr int kMinDriftPaths = 30;
inline constexpr double kDefaultResolution = 0.02;

/// Mean terminal value per unit horizon with a 95% normal confidence interval.
/// Decision: drift-detected when 0 lies outside the interval, martingale-consistent when it lies
/// inside and the interval is no wider than `resolution`, inconclusive otherwise or with fewer than
/// 30 paths. Interval ends are widened by a rounding allowance of 1e-12 relative to the data scale.
DriftVerdict drift_test(const std::vector<RealPath>& paths, double resolution = kDefaultResolution);

/// Combined decision over several forms: any drift-detected wins, then any inconclusive.
Decision combine(const std::vector<DriftVerdict>& verdicts);

/// Sample statistics of a scalar sample.
struct SampleStats {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double standard_error = 0.0;
    int n = 0;
};

SampleStats sample_stats(const std::vector<double>& values);

std::vector<double> terminal_values(const std::vector<RealPath>& paths);

void write_ensemble_csv(std::ostream& os, const PathEnsemble& ensemble);
void write_realpaths_csv(std::ostream& os, const std::vector<RealPath>& paths);

}  // namespace bundlemart
