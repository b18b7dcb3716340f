#include "bundlemart/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bundlemart {

ChartedManifold::ChartedManifold(std::string name, int dim, std::vector<Chart> atlas, MetricFn metric)
    : name_(std::move(name)), dim_(dim), atlas_(std::move(atlas)), metric_(std::move(metric)) {
    if (dim_ <= 0 || dim_ > kMaxDim) throw GeometryError(ErrorKind::InvalidArgument, "unsupported dimension");
    if (atlas_.empty()) throw GeometryError(ErrorKind::InvalidArgument, "empty atlas");
}

ChartedManifold& ChartedManifold::with_christoffel(ChristoffelFn fn) {
    christoffel_ = std::move(fn);
    return *this;
}

ChartedManifold& ChartedManifold::with_conformal_factor(ConformalFn fn) {
    conformal_ = std::move(fn);
    return *this;
}

ChartedManifold& ChartedManifold::with_brownian_drift(VectorFn fn) {
    drift_ = std::move(fn);
    return *this;
}

const Chart& ChartedManifold::chart(ChartId id) const {
    if (id < 0 || id >= static_cast<ChartId>(atlas_.size()))
        throw GeometryError(ErrorKind::InvalidArgument, "unknown chart id " + std::to_string(id));
    return atlas_[static_cast<std::size_t>(id)];
}

ChartId ChartedManifold::chart_id(std::string_view name) const {
    for (std::size_t i = 0; i < atlas_.size(); ++i)
        if (atlas_[i].name == name) return static_cast<ChartId>(i);
    throw GeometryError(ErrorKind::InvalidArgument, "unknown chart '" + std::string(name) + "' on " + name_);
}

bool ChartedManifold::in_domain(const PointRef& p) const {
    return p.x.size() == dim_ && chart(p.chart).in_domain(p.x);
}

bool ChartedManifold::in_safe(const PointRef& p) const {
    return p.x.size() == dim_ && chart(p.chart).in_safe(p.x);
}

Mat ChartedManifold::metric(const PointRef& p) const {
    if (!in_domain(p)) {
        std::ostringstream os;
        os << "metric queried outside chart '" << chart(p.chart).name << "' of " << name_;
        throw GeometryError(ErrorKind::ChartEscape, os.str());
    }
    return metric_(p.chart, p.x);
}

Christoffel ChartedManifold::christoffel(const PointRef& p) const {
    if (christoffel_) {
        if (!in_domain(p)) throw GeometryError(ErrorKind::ChartEscape, "christoffel queried outside chart on " + name_);
        return christoffel_(p.chart, p.x);
    }
    return christoffel_from_metric(*this, p);
}

Mat ChartedManifold::inverse_sqrt_metric(const PointRef& p) const {
    if (conformal_) {
        if (!in_domain(p)) throw GeometryError(ErrorKind::ChartEscape, "metric queried outside chart on " + name_);
        const double f = conformal_(p.chart, p.x);
        if (!(f > 0.0)) throw GeometryError(ErrorKind::DegenerateMetric, "non-positive conformal factor");
        return Mat::Identity(dim_, dim_) / f;
    }
    return inverse_sqrt_spd(metric(p));
}

Vec ChartedManifold::brownian_drift(const PointRef& p) const {
    if (drift_) {
        if (!in_domain(p)) throw GeometryError(ErrorKind::ChartEscape, "drift queried outside chart on " + name_);
        return drift_(p.chart, p.x);
    }
    const Mat g = metric(p);
    const Mat ginv = g.inverse();
    const Christoffel gam = christoffel(p);
    Vec out = Vec::Zero(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            for (int k = 0; k < dim_; ++k) out[i] -= 0.5 * ginv(j, k) * gam(i, j, k);
    return out;
}

bool ChartedManifold::can_transition(const PointRef& p, ChartId target) const {
    if (p.chart == target) return in_domain(p);
    const auto& tr = chart(p.chart).transitions;
    auto it = tr.find(target);
    if (it == tr.end() || !in_domain(p)) return false;
    return chart(target).in_domain(it->second(p.x));
}

PointRef ChartedManifold::transition(const PointRef& p, ChartId target) const {
    if (p.chart == target) return p;
    const auto& tr = chart(p.chart).transitions;
    auto it = tr.find(target);
    if (it == tr.end())
        throw GeometryError(ErrorKind::NoOverlap, "no transition " + chart(p.chart).name + " -> " + chart(target).name);
    if (!in_domain(p)) throw GeometryError(ErrorKind::NoOverlap, "point outside its own chart");
    PointRef q{target, it->second(p.x)};
    if (!chart(target).in_domain(q.x))
        throw GeometryError(ErrorKind::NoOverlap,
                            "point not in overlap of " + chart(p.chart).name + " and " + chart(target).name);
    return q;
}

Mat ChartedManifold::transition_jacobian(const PointRef& p, ChartId target) const {
    if (p.chart == target) return Mat::Identity(dim_, dim_);
    const auto& tr = chart(p.chart).transitions;
    auto it = tr.find(target);
    if (it == tr.end()) throw GeometryError(ErrorKind::NoOverlap, "no transition for jacobian");
    const double h = 1e-4 * std::max(1.0, p.x.cwiseAbs().maxCoeff());
    return fd_jacobian([&](const Vec& y) { return it->second(y); }, p.x, h);
}

PointRef ChartedManifold::to_safe_chart(const PointRef& p) const {
    if (in_safe(p)) return p;
    for (const auto& [target, map] : chart(p.chart).transitions) {
        if (!in_domain(p)) break;
        Vec y = map(p.x);
        if (chart(target).in_safe(y)) return PointRef{target, y};
    }
    if (in_domain(p)) return p;
    throw GeometryError(ErrorKind::ChartEscape,
                        "left chart '" + chart(p.chart).name + "' of " + name_ + " with no available transition");
}

double ChartedManifold::inner(const PointRef& p, const Vec& u, const Vec& v) const {
    return u.dot(metric(p) * v);
}

double ChartedManifold::norm(const PointRef& p, const Vec& v) const {
    return std::sqrt(std::max(0.0, inner(p, v, v)));
}

std::vector<Mat> metric_derivatives(const ChartedManifold& m, const PointRef& p, double step) {
    const int n = m.dim();
    const Chart& c = m.chart(p.chart);
    std::vector<Mat> dg(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Vec xs[4] = {p.x, p.x, p.x, p.x};
        xs[0][k] += 2 * step;
        xs[1][k] += step;
        xs[2][k] -= step;
        xs[3][k] -= 2 * step;
        for (const auto& x : xs)
            if (!c.in_domain(x))
                throw GeometryError(ErrorKind::ChartEscape, "finite-difference stencil leaves chart '" + c.name + "'");
        dg[static_cast<std::size_t>(k)] =
            (-m.metric({p.chart, xs[0]}) + 8.0 * m.metric({p.chart, xs[1]}) - 8.0 * m.metric({p.chart, xs[2]}) +
             m.metric({p.chart, xs[3]})) /
            (12.0 * step);
    }
    return dg;
}

Christoffel christoffel_from_metric(const ChartedManifold& m, const PointRef& p, double step) {
    const int n = m.dim();
    const Mat g = m.metric(p);
    Eigen::FullPivLU<Mat> lu(g);
    if (!lu.isInvertible()) throw GeometryError(ErrorKind::DegenerateMetric, "singular metric on " + m.name());
    const Mat ginv = lu.inverse();
    const auto dg = metric_derivatives(m, p, step);
    // first kind: [jk, l] = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)
    Christoffel out(n);
    for (int j = 0; j < n; ++j) {
        for (int k = j; k < n; ++k) {
            Vec first(n);
            for (int l = 0; l < n; ++l)
                first[l] = 0.5 * (dg[static_cast<std::size_t>(j)](l, k) + dg[static_cast<std::size_t>(k)](l, j) -
                                  dg[static_cast<std::size_t>(l)](j, k));
            const Vec second = ginv * first;
            for (int i = 0; i < n; ++i) {
                out(i, j, k) = second[i];
                out(i, k, j) = second[i];
            }
        }
    }
    return out;
}

double metric_compatibility_defect(const ChartedManifold& m, const PointRef& p, double step) {
    const int n = m.dim();
    const Mat g = m.metric(p);
    const auto dg = metric_derivatives(m, p, step);
    const Christoffel gam = m.christoffel(p);
    double worst = 0.0;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double v = dg[static_cast<std::size_t>(k)](i, j);
                for (int l = 0; l < n; ++l) v -= gam(l, k, i) * g(l, j) + gam(l, k, j) * g(i, l);
                worst = std::max(worst, std::abs(v));
            }
    return worst;
}

PointRef transition_point(const ChartedManifold& m, const PointRef& p, ChartId target) {
    return m.transition(p, target);
}

}  // namespace bundlemart
