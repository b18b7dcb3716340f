#pragma once

#include "bundlemart/geodesic.hpp"
#include "bundlemart/groups.hpp"
#include "bundlemart/paths.hpp"
#include "bundlemart/spaces.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace bundlemart {

using CoeffFn = std::function<Vec(ChartId, const Vec&)>;
using ShiftFn = std::function<double(const Vec&)>;
using MatrixFn = std::function<Mat(ChartId, const Vec&)>;
using MatrixListFn = std::function<std::vector<Mat>(ChartId, const Vec&)>;

struct PrincipalBundleSpec {
    std::string name;
    ManifoldPtr base;
    GroupKind group = GroupKind::SO2;
    /// Scale of the bi-invariant metric h on the fiber angle.
    double fiber_metric = 1.0;
    /// omega = dv + omega_i(x) dx^i in the trivialization over each base chart.
    CoeffFn connection;
    /// Gauge shifts: v_b = v_a + shift(x_a) when passing from chart a to chart b. Missing pairs are 0.
    std::map<std::pair<ChartId, ChartId>, ShiftFn> gauge;
};

/// Principal bundle P(M, G) with G one-dimensional and abelian (U(1) or SO(2)), described by local
/// trivializations (x, v) over the base charts, v an unwrapped fiber angle. The total space carries
/// the Kaluza-Klein metric k = pi*g + h (dv + omega_i dx^i)^2.
class PrincipalBundle {
public:
    explicit PrincipalBundle(PrincipalBundleSpec spec);

    const std::string& name() const noexcept { return spec_.name; }
    const ChartedManifold& base() const { return *spec_.base; }
    const ManifoldPtr& base_ptr() const noexcept { return spec_.base; }
    const MatrixGroup& group() const noexcept { return group_; }
    const ChartedManifold& total() const { return *total_; }
    const ManifoldPtr& total_ptr() const noexcept { return total_; }
    int base_dim() const { return spec_.base->dim(); }
    double fiber_metric() const noexcept { return spec_.fiber_metric; }

    Vec connection_coeffs(ChartId chart, const Vec& x) const { return spec_.connection(chart, x); }
    double gauge_shift(ChartId from, ChartId to, const Vec& x) const;

    PointRef point(const PointRef& base_point, double angle) const;
    PointRef project(const PointRef& p) const { return {p.chart, p.x.head(base_dim())}; }
    double angle(const PointRef& p) const { return p.x[base_dim()]; }
    /// Fiber element as a group matrix.
    Mat fiber_element(const PointRef& p) const { return group_.exp(make_vec({angle(p)})); }

    PointRef right_action(const PointRef& p, const Mat& g) const;
    /// omega(w) for a tangent vector w = (dx, dv) at p, as a Lie-algebra coordinate.
    double connection_form(const PointRef& p, const Vec& w) const;
    /// A* at p for the algebra element a.
    Vec fundamental_field(const PointRef& p, double a) const;
    /// u^i (D_i - omega_i D_v).
    Vec horizontal_lift_vector(const PointRef& p, const Vec& u) const;
    Vec project_vector(const Vec& w) const { return w.head(base_dim()); }
    /// g(pi_* w1, pi_* w2) + h(omega(w1), omega(w2)).
    double kaluza_klein(const PointRef& p, const Vec& w1, const Vec& w2) const;

    /// Fiber angle integrated by the midpoint rule on -omega_i dx^i, gauge-shifted on chart changes.
    SamplePath horizontal_lift_path(const SamplePath& base_path, double v0) const;
    PathEnsemble horizontal_lift(const PathEnsemble& base, double v0) const;

    /// The connection form as a one-form field on the total space.
    OneFormField connection_one_form() const;

private:
    PrincipalBundleSpec spec_;
    MatrixGroup group_;
    ManifoldPtr total_;
};

using PrincipalPtr = std::shared_ptr<const PrincipalBundle>;

enum class ConnectionKind { Sasaki, Horizontal, Complete };

namespace detail {
struct AssocCore;
}

std::string to_string(ConnectionKind k);
ConnectionKind connection_kind_from_string(const std::string& s);

struct AssociatedBundleSpec {
    std::string name;
    PrincipalPtr principal;
    int fiber_dim = 2;
    /// Infinitesimal generator J of the representation rho(v) = exp(v J) on R^r.
    Mat generator;
    /// L(x): fiber coordinates nu = L(x) rho(v) xi. Identity when empty.
    MatrixFn frame;
    /// Optional closed form of the connection matrices A_i; otherwise -dL L^-1 + omega_i L J L^-1.
    MatrixListFn connection_matrices;
    ConnectionKind connection = ConnectionKind::Horizontal;
    /// Fiber coordinates are natural tangent coordinates of the base (E = TM); required by Complete.
    bool tangent_bundle = false;
};

/// Linear associated bundle E = P x_G R^r over the charts of the base, coordinates (x, nu).
/// Metric pi*g + theta^T (L L^T)^{-1} theta with the vertical coframe theta = d nu + A_i nu dx^i.
/// Field accessors (vertical_form, connection_field) refer to this object, which must outlive them.
class AssociatedBundle {
public:
    explicit AssociatedBundle(AssociatedBundleSpec spec);

    const std::string& name() const noexcept { return spec_.name; }
    const PrincipalBundle& principal() const { return *spec_.principal; }
    const PrincipalPtr& principal_ptr() const noexcept { return spec_.principal; }
    const ChartedManifold& base() const { return spec_.principal->base(); }
    const ChartedManifold& total() const { return *total_; }
    const ManifoldPtr& total_ptr() const noexcept { return total_; }
    const ChartedManifold& fiber() const { return *fiber_; }
    const ManifoldPtr& fiber_ptr() const noexcept { return fiber_; }
    int base_dim() const { return base().dim(); }
    int fiber_dim() const noexcept { return spec_.fiber_dim; }
    ConnectionKind connection_kind() const noexcept { return spec_.connection; }
    bool is_tangent_bundle() const noexcept { return spec_.tangent_bundle; }
    const Mat& generator() const noexcept { return spec_.generator; }

    Mat frame(ChartId chart, const Vec& x) const;
    Mat rho(double v) const;
    std::vector<Mat> connection_matrices(ChartId chart, const Vec& x) const;
    /// r x n matrix with columns A_i nu.
    Mat coframe_shift(const PointRef& e) const;

    PointRef mu(const PointRef& p, const Vec& xi) const;
    /// xi with mu(p, xi) = e; throws FiberMismatch when e is not over pi(p).
    Vec mu_inverse(const PointRef& p, const PointRef& e) const;
    PointRef project(const PointRef& e) const { return {e.chart, e.x.head(base_dim())}; }
    Vec fiber_coords(const PointRef& e) const { return e.x.tail(fiber_dim()); }
    PointRef point(const PointRef& base_point, const Vec& nu) const;

    Mat vertical_projector(const PointRef& e) const;
    Mat horizontal_projector(const PointRef& e) const;
    /// Components of theta^alpha on E coordinates (length n + r).
    Vec vertical_coframe(const PointRef& e, int alpha) const;
    OneFormField vertical_form(int alpha) const;

    /// The chosen connection on E, full coefficients (the horizontal-lift table has torsion).
    Christoffel connection(const PointRef& e) const;
    ConnectionField connection_field() const;

private:
    Christoffel lift_table(const PointRef& e, bool complete) const;

    AssociatedBundleSpec spec_;
    std::shared_ptr<const detail::AssocCore> core_;
    ManifoldPtr total_;
    ManifoldPtr fiber_;
};

using AssociatedPtr = std::shared_ptr<const AssociatedBundle>;

struct FiberDistance {
    double total_distance = 0.0;
    double group_distance = 0.0;
    bool converged = false;
};

/// (d_P(u a, u b), d_G(a, b)) for the Kaluza-Klein metric.
FiberDistance fiber_distance_check(const PrincipalBundle& bundle, const PointRef& u, const Mat& a, const Mat& b,
                                   const DistanceOptions& options = {});

/// The ensemble of E-valued processes mu(Y_k, xi_k).
SamplePath mu_path(const AssociatedBundle& e, const SamplePath& horizontal, const std::vector<Vec>& xi);

struct HorizontalPullbackResult {
    RealPath direct;     // int theta d^v X with X = mu(Y, xi)
    RealPath through_n;  // int (mu_Y* theta) d^N xi
    double horizontality_defect = 0.0;
};

/// Both sides of the identity for X = mu(Y, xi) with Y horizontal. Rejects non-horizontal Y
/// (midpoint integral of omega along Y above `tolerance`) with NonHorizontal.
HorizontalPullbackResult horizontal_pullback_identity_check(const AssociatedBundle& e, const SamplePath& horizontal, const std::vector<Vec>& xi,
                            const OneFormField& theta, double tolerance = 1e-8);

}  // namespace bundlemart
