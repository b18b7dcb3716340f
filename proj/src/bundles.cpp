#include "bundlemart/bundles.hpp"
#include "bundlemart/parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace bundlemart {

namespace {

Vec concat(const Vec& a, const Vec& b) {
    Vec out(a.size() + b.size());
    out << a, b;
    return out;
}

bool base_in(const ChartedManifold& base, ChartId c, const Vec& x, bool safe) {
    const Chart& ch = base.chart(c);
    const Vec head = x.head(base.dim());
    return safe ? ch.in_safe(head) : ch.in_domain(head);
}

}  // namespace

// ---------------------------------------------------------------- principal bundle

PrincipalBundle::PrincipalBundle(PrincipalBundleSpec spec) : spec_(std::move(spec)), group_(spec_.group) {
    if (!spec_.base) throw GeometryError(ErrorKind::InvalidArgument, "principal bundle without base");
    if (!group_.is_abelian())
        throw GeometryError(ErrorKind::InvalidArgument, "principal bundles are modeled for U1 and SO2 only");
    if (!spec_.connection) {
        const int n = spec_.base->dim();
        spec_.connection = [n](ChartId, const Vec&) { return Vec(Vec::Zero(n)); };
    }
    const ManifoldPtr base = spec_.base;
    const int n = base->dim();
    const auto gauge = spec_.gauge;
    const CoeffFn conn = spec_.connection;
    const double h = spec_.fiber_metric;

    std::vector<Chart> charts;
    for (std::size_t c = 0; c < base->atlas().size(); ++c) {
        const ChartId id = static_cast<ChartId>(c);
        Chart ch;
        ch.name = base->atlas()[c].name;
        ch.dim = n + 1;
        ch.in_domain = [base, id](const Vec& x) { return base_in(*base, id, x, false); };
        ch.in_safe = [base, id](const Vec& x) { return base_in(*base, id, x, true); };
        for (const auto& [target, map] : base->atlas()[c].transitions) {
            ShiftFn shift;
            if (auto it = gauge.find({id, target}); it != gauge.end()) shift = it->second;
            ch.transitions[target] = [map, shift, n](const Vec& x) {
                const Vec xb = x.head(n);
                Vec out(n + 1);
                out.head(n) = map(xb);
                out[n] = x[n] + (shift ? shift(xb) : 0.0);
                return out;
            };
        }
        charts.push_back(std::move(ch));
    }
    total_ = std::make_shared<ChartedManifold>(
        spec_.name + "/total", n + 1, std::move(charts), [base, conn, h, n](ChartId c, const Vec& x) {
            const Vec xb = x.head(n);
            const Mat g = base->metric({c, xb});
            const Vec w = conn(c, xb);
            Mat k(n + 1, n + 1);
            k.topLeftCorner(n, n) = g + h * w * w.transpose();
            k.topRightCorner(n, 1) = h * w;
            k.bottomLeftCorner(1, n) = h * w.transpose();
            k(n, n) = h;
            return k;
        });
}

double PrincipalBundle::gauge_shift(ChartId from, ChartId to, const Vec& x) const {
    if (from == to) return 0.0;
    auto it = spec_.gauge.find({from, to});
    return it == spec_.gauge.end() ? 0.0 : it->second(x);
}

PointRef PrincipalBundle::point(const PointRef& base_point, double angle) const {
    return {base_point.chart, concat(base_point.x, make_vec({angle}))};
}

PointRef PrincipalBundle::right_action(const PointRef& p, const Mat& g) const {
    PointRef q = p;
    q.x[base_dim()] += group_.log(g)[0];
    return q;
}

double PrincipalBundle::connection_form(const PointRef& p, const Vec& w) const {
    const int n = base_dim();
    return w[n] + connection_coeffs(p.chart, p.x.head(n)).dot(w.head(n));
}

Vec PrincipalBundle::fundamental_field(const PointRef&, double a) const {
    Vec w = Vec::Zero(base_dim() + 1);
    w[base_dim()] = a;
    return w;
}

Vec PrincipalBundle::horizontal_lift_vector(const PointRef& p, const Vec& u) const {
    const int n = base_dim();
    return concat(u, make_vec({-connection_coeffs(p.chart, p.x.head(n)).dot(u)}));
}

double PrincipalBundle::kaluza_klein(const PointRef& p, const Vec& w1, const Vec& w2) const {
    const PointRef b = project(p);
    return base().inner(b, project_vector(w1), project_vector(w2)) +
           spec_.fiber_metric * connection_form(p, w1) * connection_form(p, w2);
}

SamplePath PrincipalBundle::horizontal_lift_path(const SamplePath& base_path, double v0) const {
    base_path.validate();
    SamplePath out;
    out.time = base_path.time;
    out.states.reserve(base_path.size());
    if (base_path.states.empty()) return out;
    double v = v0;
    out.states.push_back(point(base_path.states.front(), v));
    for (std::size_t k = 0; k + 1 < base_path.size(); ++k) {
        const PointRef& a = base_path.states[k];
        const PointRef& b = base_path.states[k + 1];
        const Vec dx = chart_increment(base(), a, b);
        v -= connection_coeffs(a.chart, a.x + 0.5 * dx).dot(dx);
        if (b.chart != a.chart) v += gauge_shift(a.chart, b.chart, a.x + dx);
        out.states.push_back(point(b, v));
    }
    return out;
}

PathEnsemble PrincipalBundle::horizontal_lift(const PathEnsemble& base_ens, double v0) const {
    PathEnsemble out;
    out.seed = base_ens.seed;
    out.dt = base_ens.dt;
    out.generator_tag = "horizontal-lift/" + name() + "/" + base_ens.generator_tag;
    out.paths.resize(base_ens.paths.size());
    parallel_for(out.paths.size(), [&](std::size_t i) { out.paths[i] = horizontal_lift_path(base_ens.paths[i], v0); });
    return out;
}

OneFormField PrincipalBundle::connection_one_form() const {
    const CoeffFn conn = spec_.connection;
    const int n = base_dim();
    return [conn, n](const PointRef& p) { return concat(conn(p.chart, p.x.head(n)), make_vec({1.0})); };
}

// ---------------------------------------------------------------- associated bundle

std::string to_string(ConnectionKind k) {
    switch (k) {
    case ConnectionKind::Sasaki: return "sasaki";
    case ConnectionKind::Horizontal: return "horizontal";
    case ConnectionKind::Complete: return "complete";
    }
    return "?";
}

ConnectionKind connection_kind_from_string(const std::string& s) {
    if (s == "sasaki") return ConnectionKind::Sasaki;
    if (s == "horizontal" || s == "horizontal_lift") return ConnectionKind::Horizontal;
    if (s == "complete" || s == "complete_lift") return ConnectionKind::Complete;
    throw GeometryError(ErrorKind::InvalidArgument, "unknown lift kind '" + s + "' (sasaki, horizontal, complete)");
}

namespace detail {

struct AssocCore {
    AssociatedBundleSpec spec;
    bool complex_structure = false;  // J^2 = -I

    int n() const { return spec.principal->base_dim(); }
    int r() const { return spec.fiber_dim; }

    Mat frame(ChartId c, const Vec& x) const {
        return spec.frame ? spec.frame(c, x) : Mat(Mat::Identity(r(), r()));
    }

    Mat rho(double v) const {
        if (complex_structure) return Mat(std::cos(v) * Mat::Identity(r(), r()) + std::sin(v) * spec.generator);
        const Eigen::MatrixXd a = v * Eigen::MatrixXd(spec.generator);
        return Mat(a.exp());
    }

    std::vector<Mat> connection_matrices(ChartId c, const Vec& x) const {
        if (spec.connection_matrices) return spec.connection_matrices(c, x);
        const Mat l = frame(c, x);
        const Mat linv = l.inverse();
        const Vec w = spec.principal->connection_coeffs(c, x);
        std::vector<Mat> out;
        out.reserve(static_cast<std::size_t>(n()));
        const double h = 1e-4;
        for (int i = 0; i < n(); ++i) {
            Vec xs[4] = {x, x, x, x};
            xs[0][i] += 2 * h, xs[1][i] += h, xs[2][i] -= h, xs[3][i] -= 2 * h;
            const Mat dl = (-frame(c, xs[0]) + 8.0 * frame(c, xs[1]) - 8.0 * frame(c, xs[2]) + frame(c, xs[3])) / (12 * h);
            out.push_back(-dl * linv + w[i] * l * spec.generator * linv);
        }
        return out;
    }

    Mat coframe_shift(ChartId c, const Vec& x, const Vec& nu) const {
        const auto a = connection_matrices(c, x);
        Mat b(r(), n());
        for (int i = 0; i < n(); ++i) b.col(i) = a[static_cast<std::size_t>(i)] * nu;
        return b;
    }

    Mat metric(ChartId c, const Vec& e) const {
        const int nn = n(), rr = r();
        const Vec x = e.head(nn);
        const Vec nu = e.tail(rr);
        const Mat g = spec.principal->base().metric({c, x});
        const Mat l = frame(c, x);
        const Mat fib = (l * l.transpose()).inverse();
        const Mat b = coframe_shift(c, x, nu);
        Mat out(nn + rr, nn + rr);
        out.topLeftCorner(nn, nn) = g + b.transpose() * fib * b;
        out.topRightCorner(nn, rr) = b.transpose() * fib;
        out.bottomLeftCorner(rr, nn) = fib * b;
        out.bottomRightCorner(rr, rr) = fib;
        return out;
    }
};

}  // namespace detail

using detail::AssocCore;

AssociatedBundle::AssociatedBundle(AssociatedBundleSpec spec) : spec_(std::move(spec)) {
    if (!spec_.principal) throw GeometryError(ErrorKind::InvalidArgument, "associated bundle without principal bundle");
    const int r = spec_.fiber_dim;
    const int n = spec_.principal->base_dim();
    if (r <= 0 || n + r > kMaxDim) throw GeometryError(ErrorKind::InvalidArgument, "unsupported fiber dimension");
    if (spec_.generator.rows() != r || spec_.generator.cols() != r)
        throw GeometryError(ErrorKind::InvalidArgument, "representation generator has wrong size");
    if (spec_.connection == ConnectionKind::Complete && !(spec_.tangent_bundle && r == n))
        throw GeometryError(ErrorKind::InvalidArgument, "complete lift needs a tangent bundle");

    auto core = std::make_shared<AssocCore>();
    core->spec = spec_;
    core->complex_structure = (spec_.generator * spec_.generator + Mat::Identity(r, r)).cwiseAbs().maxCoeff() < 1e-14;
    const ChartedManifold& base = spec_.principal->base();
    const ManifoldPtr base_ptr = spec_.principal->base_ptr();
    const PrincipalPtr principal = spec_.principal;

    std::vector<Chart> charts;
    for (std::size_t c = 0; c < base.atlas().size(); ++c) {
        const ChartId id = static_cast<ChartId>(c);
        Chart ch;
        ch.name = base.atlas()[c].name;
        ch.dim = n + r;
        ch.in_domain = [base_ptr, id](const Vec& x) { return base_in(*base_ptr, id, x, false); };
        ch.in_safe = [base_ptr, id](const Vec& x) { return base_in(*base_ptr, id, x, true); };
        for (const auto& [target, map] : base.atlas()[c].transitions) {
            ch.transitions[target] = [core, principal, map, id, target = target, n, r](const Vec& e) {
                const Vec x = e.head(n);
                const Vec y = map(x);
                const double s = principal->gauge_shift(id, target, x);
                Vec out(n + r);
                out.head(n) = y;
                out.tail(r) = core->frame(target, y) * core->rho(s) * core->frame(id, x).inverse() * e.tail(r);
                return out;
            };
        }
        charts.push_back(std::move(ch));
    }
    auto total = std::make_shared<ChartedManifold>(spec_.name + "/total", n + r, std::move(charts),
                                                   [core](ChartId c, const Vec& e) { return core->metric(c, e); });
    total_ = total;
    core_ = core;
    fiber_ = make_flat(r);
}

Mat AssociatedBundle::frame(ChartId chart, const Vec& x) const { return core_->frame(chart, x); }

Mat AssociatedBundle::rho(double v) const { return core_->rho(v); }

std::vector<Mat> AssociatedBundle::connection_matrices(ChartId chart, const Vec& x) const {
    return core_->connection_matrices(chart, x);
}

Mat AssociatedBundle::coframe_shift(const PointRef& e) const {
    const auto a = connection_matrices(e.chart, e.x.head(base_dim()));
    const Vec nu = fiber_coords(e);
    Mat b(fiber_dim(), base_dim());
    for (int i = 0; i < base_dim(); ++i) b.col(i) = a[static_cast<std::size_t>(i)] * nu;
    return b;
}

PointRef AssociatedBundle::point(const PointRef& base_point, const Vec& nu) const {
    return {base_point.chart, concat(base_point.x, nu)};
}

PointRef AssociatedBundle::mu(const PointRef& p, const Vec& xi) const {
    const PointRef b = principal().project(p);
    return point(b, frame(b.chart, b.x) * rho(principal().angle(p)) * xi);
}

Vec AssociatedBundle::mu_inverse(const PointRef& p, const PointRef& e) const {
    const PointRef b = principal().project(p);
    PointRef e_here;
    try {
        e_here = total().transition(e, p.chart);
    } catch (const GeometryError&) {
        throw GeometryError(ErrorKind::FiberMismatch, "E-point not over the chart of p");
    }
    if ((e_here.x.head(base_dim()) - b.x).norm() > 1e-9 * (1.0 + b.x.norm()))
        throw GeometryError(ErrorKind::FiberMismatch, "E-point lies over a different base point");
    return rho(-principal().angle(p)) * frame(b.chart, b.x).inverse() * fiber_coords(e_here);
}

Mat AssociatedBundle::vertical_projector(const PointRef& e) const {
    const int n = base_dim(), r = fiber_dim();
    Mat v = Mat::Zero(n + r, n + r);
    v.bottomLeftCorner(r, n) = coframe_shift(e);
    v.bottomRightCorner(r, r) = Mat::Identity(r, r);
    return v;
}

Mat AssociatedBundle::horizontal_projector(const PointRef& e) const {
    const int d = base_dim() + fiber_dim();
    return Mat::Identity(d, d) - vertical_projector(e);
}

Vec AssociatedBundle::vertical_coframe(const PointRef& e, int alpha) const {
    const int n = base_dim(), r = fiber_dim();
    Vec out = Vec::Zero(n + r);
    out.head(n) = coframe_shift(e).row(alpha).transpose();
    out[n + alpha] = 1.0;
    return out;
}

OneFormField AssociatedBundle::vertical_form(int alpha) const {
    return [this, alpha](const PointRef& e) { return vertical_coframe(e, alpha); };
}

Christoffel AssociatedBundle::lift_table(const PointRef& e, bool complete) const {
    const int n = base_dim(), r = fiber_dim();
    const Vec x = e.x.head(n);
    const Vec nu = fiber_coords(e);
    const PointRef b{e.chart, x};
    const Christoffel gm = base().christoffel(b);
    const auto a = connection_matrices(e.chart, x);
    Christoffel out(n + r);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) out(i, j, k) = gm(i, j, k);
    for (int i = 0; i < n; ++i)
        for (int be = 0; be < r; ++be)
            for (int al = 0; al < r; ++al) {
                const double v = complete ? gm(be, i, al) : a[static_cast<std::size_t>(i)](be, al);
                out(n + be, i, n + al) = v;
                out(n + be, n + al, i) = v;
            }
    const double h = 1e-4;
    if (complete) {
        // nu^l d_l Gamma^beta_{ij}
        for (int l = 0; l < n; ++l) {
            if (nu[l] == 0.0) continue;
            Vec xs[4] = {x, x, x, x};
            xs[0][l] += 2 * h, xs[1][l] += h, xs[2][l] -= h, xs[3][l] -= 2 * h;
            const Christoffel g0 = base().christoffel({e.chart, xs[0]});
            const Christoffel g1 = base().christoffel({e.chart, xs[1]});
            const Christoffel g2 = base().christoffel({e.chart, xs[2]});
            const Christoffel g3 = base().christoffel({e.chart, xs[3]});
            for (int be = 0; be < r; ++be)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        out(n + be, i, j) +=
                            nu[l] * (-g0(be, i, j) + 8 * g1(be, i, j) - 8 * g2(be, i, j) + g3(be, i, j)) / (12 * h);
        }
        return out;
    }
    // (d_i A_j nu + A_i A_j nu - Gamma^h_{ij} A_h nu)^beta
    std::vector<std::vector<Mat>> da(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vec xs[4] = {x, x, x, x};
        xs[0][i] += 2 * h, xs[1][i] += h, xs[2][i] -= h, xs[3][i] -= 2 * h;
        const auto a0 = connection_matrices(e.chart, xs[0]);
        const auto a1 = connection_matrices(e.chart, xs[1]);
        const auto a2 = connection_matrices(e.chart, xs[2]);
        const auto a3 = connection_matrices(e.chart, xs[3]);
        for (int j = 0; j < n; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            da[static_cast<std::size_t>(i)].push_back((-a0[sj] + 8.0 * a1[sj] - 8.0 * a2[sj] + a3[sj]) / (12 * h));
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
            Vec v = da[si][sj] * nu + a[si] * (a[sj] * nu);
            for (int hh = 0; hh < n; ++hh) v -= gm(hh, i, j) * (a[static_cast<std::size_t>(hh)] * nu);
            for (int be = 0; be < r; ++be) out(n + be, i, j) = v[be];
        }
    return out;
}

Christoffel AssociatedBundle::connection(const PointRef& e) const {
    switch (spec_.connection) {
    case ConnectionKind::Sasaki: return total().christoffel(e);
    case ConnectionKind::Horizontal: return lift_table(e, false);
    case ConnectionKind::Complete: return lift_table(e, true);
    }
    return total().christoffel(e);
}

ConnectionField AssociatedBundle::connection_field() const {
    return [this](const PointRef& e) { return connection(e); };
}

// ---------------------------------------------------------------- checks

FiberDistance fiber_distance_check(const PrincipalBundle& bundle, const PointRef& u, const Mat& a, const Mat& b,
                                   const DistanceOptions& options) {
    FiberDistance out;
    out.group_distance = std::sqrt(bundle.fiber_metric()) * bundle.group().distance(a, b);
    const PointRef pa = bundle.right_action(u, a);
    const PointRef pb = bundle.right_action(u, b);
    const DistanceResult d = distance_estimate(bundle.total(), pa, pb, options);
    out.total_distance = d.distance;
    out.converged = d.converged;
    return out;
}

SamplePath mu_path(const AssociatedBundle& e, const SamplePath& horizontal, const std::vector<Vec>& xi) {
    if (xi.size() != horizontal.size()) throw GeometryError(ErrorKind::InvalidArgument, "fiber path length mismatch");
    SamplePath out;
    out.time = horizontal.time;
    out.states.reserve(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) out.states.push_back(e.mu(horizontal.states[k], xi[k]));
    return out;
}

HorizontalPullbackResult horizontal_pullback_identity_check(const AssociatedBundle& e, const SamplePath& horizontal, const std::vector<Vec>& xi,
                            const OneFormField& theta, double tolerance) {
    HorizontalPullbackResult out;
    const PrincipalBundle& p = e.principal();
    const RealPath om = stratonovich_integral(p.total(), p.connection_one_form(), horizontal);
    for (double v : om.values) out.horizontality_defect = std::max(out.horizontality_defect, std::abs(v));
    if (out.horizontality_defect > tolerance)
        throw GeometryError(ErrorKind::NonHorizontal, "path is not horizontal: |int omega| = " +
                                                          std::to_string(out.horizontality_defect));
    const SamplePath x = mu_path(e, horizontal, xi);
    out.direct = ito_integral(e.total(), theta, x, e.connection_field());

    out.through_n.time = x.time;
    out.through_n.values.assign(x.size(), 0.0);
    const int n = e.base_dim(), r = e.fiber_dim();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        const PointRef& y = horizontal.states[k];
        Vec push = Vec::Zero(n + r);
        push.tail(r) = e.frame(y.chart, y.x.head(n)) * e.rho(p.angle(y)) * (xi[k + 1] - xi[k]);
        acc += theta(x.states[k]).dot(push);
        out.through_n.values[k + 1] = acc;
    }
    return out;
}

}  // namespace bundlemart
