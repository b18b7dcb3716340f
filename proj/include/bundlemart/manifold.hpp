#pragma once

#include "bundlemart/linalg.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bundlemart {

using ChartId = int;

/// A point given by its coordinates in one chart of an atlas.
struct PointRef {
    ChartId chart = 0;
    Vec x;
};

struct TangentVec {
    PointRef base;
    Vec components;
};

struct OneFormVal {
    PointRef base;
    Vec components;
};

struct BilinearVal {
    PointRef base;
    Mat components;
};

using CoordPredicate = std::function<bool(const Vec&)>;
using CoordMap = std::function<Vec(const Vec&)>;

struct Chart {
    std::string name;
    int dim = 0;
    CoordPredicate in_domain;
    /// Strictly inside in_domain; leaving it triggers a chart switch.
    CoordPredicate in_safe;
    std::map<ChartId, CoordMap> transitions;
};

using MetricFn = std::function<Mat(ChartId, const Vec&)>;
using ChristoffelFn = std::function<Christoffel(ChartId, const Vec&)>;
/// For conformally flat charts: g = factor^2 * identity.
using ConformalFn = std::function<double(ChartId, const Vec&)>;
/// Coordinate drift of Brownian motion, -1/2 g^{jk} Gamma^i_{jk}.
using VectorFn = std::function<Vec(ChartId, const Vec&)>;

/// Riemannian manifold given by an explicit atlas with analytic metric components.
/// Immutable after construction; all queries are const and thread-safe.
class ChartedManifold {
public:
    ChartedManifold(std::string name, int dim, std::vector<Chart> atlas, MetricFn metric);

    /// Closed-form connection coefficients replacing the finite-difference default.
    ChartedManifold& with_christoffel(ChristoffelFn fn);
    ChartedManifold& with_conformal_factor(ConformalFn fn);
    ChartedManifold& with_brownian_drift(VectorFn fn);

    const std::string& name() const noexcept { return name_; }
    int dim() const noexcept { return dim_; }
    const std::vector<Chart>& atlas() const noexcept { return atlas_; }
    const Chart& chart(ChartId id) const;
    ChartId chart_id(std::string_view name) const;
    bool has_closed_form_christoffel() const noexcept { return static_cast<bool>(christoffel_); }

    bool in_domain(const PointRef& p) const;
    bool in_safe(const PointRef& p) const;

    Mat metric(const PointRef& p) const;
    Christoffel christoffel(const PointRef& p) const;
    /// S with S S^T = g^{-1}; columns form a g-orthonormal frame.
    Mat inverse_sqrt_metric(const PointRef& p) const;
    /// -1/2 g^{jk} Gamma^i_{jk}: closed form when supplied, otherwise from metric and connection.
    Vec brownian_drift(const PointRef& p) const;

    PointRef transition(const PointRef& p, ChartId target) const;
    bool can_transition(const PointRef& p, ChartId target) const;
    /// d(target coords)/d(source coords), fourth-order central differences.
    Mat transition_jacobian(const PointRef& p, ChartId target) const;
    /// Returns p itself when inside its chart's safety region, otherwise the same point in
    /// a chart whose safety region contains it.
    PointRef to_safe_chart(const PointRef& p) const;
    /// Coordinates of p in the given chart (identity when already there).
    Vec coords_in(const PointRef& p, ChartId target) const { return transition(p, target).x; }

    double norm(const PointRef& p, const Vec& v) const;
    double inner(const PointRef& p, const Vec& u, const Vec& v) const;

private:
    std::string name_;
    int dim_;
    std::vector<Chart> atlas_;
    MetricFn metric_;
    ChristoffelFn christoffel_;
    ConformalFn conformal_;
    VectorFn drift_;
};

/// Levi-Civita coefficients 1/2 g^{il}(d_j g_lk + d_k g_lj - d_l g_jk) by fourth-order central differences.
Christoffel christoffel_from_metric(const ChartedManifold& m, const PointRef& p, double step = 1e-4);

/// Metric partial derivatives d_k g_ij as a dim-array of matrices.
std::vector<Mat> metric_derivatives(const ChartedManifold& m, const PointRef& p, double step = 1e-4);

/// max |d_k g_ij - Gamma^l_{ki} g_lj - Gamma^l_{kj} g_il| at p for the manifold's connection.
double metric_compatibility_defect(const ChartedManifold& m, const PointRef& p, double step = 1e-4);

PointRef transition_point(const ChartedManifold& m, const PointRef& p, ChartId target);

/// Fourth-order central difference of a vector-valued function of coordinates.
template <class F>
Mat fd_jacobian(F&& f, const Vec& x, double h) {
    const Vec f0 = f(x);
    Mat jac(f0.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Vec xp2 = x, xp1 = x, xm1 = x, xm2 = x;
        xp2[k] += 2 * h;
        xp1[k] += h;
        xm1[k] -= h;
        xm2[k] -= 2 * h;
        jac.col(k) = (-f(xp2) + 8.0 * f(xp1) - 8.0 * f(xm1) + f(xm2)) / (12.0 * h);
    }
    return jac;
}

}  // namespace bundlemart
