#include "bundlemart/sections.hpp"
#include "bundlemart/parallel.hpp"
#include "bundlemart/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace bundlemart {

namespace {

Vec section_coords(const Section& s, ChartId c, const Vec& x) {
    const Vec nu = s.fiber(c, x);
    Vec out(x.size() + nu.size());
    out << x, nu;
    return out;
}

Vec lift_value(const AssociatedBundle& e, ChartId c, const Vec& x, double v, const Vec& nu) {
    return e.rho(-v) * e.frame(c, x).inverse() * nu;
}

// Full E-coordinate tension at one step.
Vec tension_at(const Section& s, const PointRef& x, double h) {
    const AssociatedBundle& e = *s.bundle;
    const int n = e.base_dim(), d = n + e.fiber_dim();
    const ChartId c = x.chart;
    const Vec s0 = section_coords(s, c, x.x);
    Mat first(d, n);
    std::vector<Vec> plus(static_cast<std::size_t>(n)), minus(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        Vec xp = x.x, xm = x.x;
        xp[j] += h;
        xm[j] -= h;
        plus[static_cast<std::size_t>(j)] = section_coords(s, c, xp);
        minus[static_cast<std::size_t>(j)] = section_coords(s, c, xm);
        first.col(j) = (plus[static_cast<std::size_t>(j)] - minus[static_cast<std::size_t>(j)]) / (2 * h);
    }
    auto second = [&](int j, int k) -> Vec {
        if (j == k) return (plus[static_cast<std::size_t>(j)] - 2.0 * s0 + minus[static_cast<std::size_t>(j)]) / (h * h);
        auto at = [&](double a, double b) {
            Vec y = x.x;
            y[j] += a;
            y[k] += b;
            return section_coords(s, c, y);
        };
        return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
    };
    const Mat ginv = e.base().metric(x).inverse();
    const Christoffel gm = e.base().christoffel(x);
    const Christoffel ge = e.connection({c, s0});
    Vec tau = Vec::Zero(d);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            if (ginv(j, k) == 0.0) continue;
            Vec t = second(j, k);
            for (int i = 0; i < n; ++i) t -= gm(i, j, k) * first.col(i);
            t += ge.contract(first.col(j), first.col(k));
            tau += ginv(j, k) * t;
        }
    return tau;
}

Vec vertical_part(const AssociatedBundle& e, const PointRef& point, const Vec& tau) {
    const int n = e.base_dim();
    return tau.tail(e.fiber_dim()) + e.coframe_shift(point) * tau.head(n);
}

// Endpoint (x, v) of the horizontal lift of the base geodesic with initial velocity u, at time t.
std::pair<Vec, double> horizontal_geodesic(const PrincipalBundle& p, ChartId c, const Vec& x0, const Vec& u0,
                                           double v0, double t, int steps) {
    const ChartedManifold& base = p.base();
    struct State {
        Vec x, u;
        double v;
    };
    auto rhs = [&](const State& y) {
        return State{y.u, -base.christoffel({c, y.x}).contract(y.u, y.u), -p.connection_coeffs(c, y.x).dot(y.u)};
    };
    auto axpy = [](const State& y, double a, const State& k) { return State{y.x + a * k.x, y.u + a * k.u, y.v + a * k.v}; };
    State y{x0, u0, v0};
    const double dt = t / steps;
    for (int i = 0; i < steps; ++i) {
        const State k1 = rhs(y);
        const State k2 = rhs(axpy(y, dt / 2, k1));
        const State k3 = rhs(axpy(y, dt / 2, k2));
        const State k4 = rhs(axpy(y, dt, k3));
        y.x += dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
        y.u += dt / 6 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u);
        y.v += dt / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    }
    return {y.x, y.v};
}

Vec horizontal_tension_at(const Section& s, const PointRef& p, double h) {
    const AssociatedBundle& e = *s.bundle;
    const PrincipalBundle& pb = e.principal();
    const int n = e.base_dim();
    const ChartId c = p.chart;
    const Vec x = p.x.head(n);
    const double v = pb.angle(p);
    auto lift_at = [&](const Vec& y, double w) { return lift_value(e, c, y, w, s.fiber(c, y)); };
    const Vec f0 = lift_at(x, v);
    const Mat frame = e.base().inverse_sqrt_metric({c, x});
    Vec out = Vec::Zero(e.fiber_dim());
    for (int i = 0; i < n; ++i) {
        const Vec u = frame.col(i);
        const auto [xp, vp] = horizontal_geodesic(pb, c, x, u, v, h, 4);
        const auto [xm, vm] = horizontal_geodesic(pb, c, x, u, v, -h, 4);
        out += (lift_at(xp, vp) - 2.0 * f0 + lift_at(xm, vm)) / (h * h);
    }
    return out;
}

std::vector<DriftVerdict> verdicts_for(const std::vector<std::vector<RealPath>>& rows, double resolution,
                                       const std::string& prefix) {
    std::vector<DriftVerdict> out;
    for (std::size_t a = 0; a < rows.size(); ++a) {
        DriftVerdict v = drift_test(rows[a], resolution);
        v.label = prefix + std::to_string(a);
        out.push_back(v);
    }
    return out;
}

// Running increments xi_k - xi_0 per coordinate.
std::vector<std::vector<RealPath>> increment_paths(const std::vector<std::vector<Vec>>& values,
                                                   const PathEnsemble& grid, int r) {
    std::vector<std::vector<RealPath>> rows(static_cast<std::size_t>(r), std::vector<RealPath>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
        for (int a = 0; a < r; ++a) {
            RealPath& rp = rows[static_cast<std::size_t>(a)][i];
            rp.time = grid.paths[i].time;
            rp.values.reserve(values[i].size());
            for (const Vec& v : values[i]) rp.values.push_back(v[a] - values[i].front()[a]);
        }
    return rows;
}

std::vector<std::vector<RealPath>> vertical_rows(const AssociatedBundle& e, const std::vector<SamplePath>& paths) {
    const int r = e.fiber_dim();
    std::vector<std::vector<RealPath>> rows(static_cast<std::size_t>(r), std::vector<RealPath>(paths.size()));
    parallel_for(paths.size(), [&](std::size_t i) {
        const SamplePath& path = paths[i];
        std::vector<double> acc(static_cast<std::size_t>(r), 0.0);
        for (int a = 0; a < r; ++a) {
            RealPath& rp = rows[static_cast<std::size_t>(a)][i];
            rp.time = path.time;
            rp.values.assign(path.size(), 0.0);
        }
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            const PointRef& a = path.states[k];
            const Vec dx = chart_increment(e.total(), a, path.states[k + 1]);
            const Vec step = dx + 0.5 * e.connection(a).contract(dx, dx);
            // theta^alpha(step) for all alpha at once
            const Vec vert = vertical_part(e, a, step);
            for (int al = 0; al < r; ++al) {
                acc[static_cast<std::size_t>(al)] += vert[al];
                rows[static_cast<std::size_t>(al)][i].values[k + 1] = acc[static_cast<std::size_t>(al)];
            }
        }
    });
    return rows;
}

}  // namespace

Vec equivariant_lift(const Section& s, const PointRef& p) {
    const AssociatedBundle& e = *s.bundle;
    const PointRef b = e.principal().project(p);
    return lift_value(e, b.chart, b.x, e.principal().angle(p), s.fiber(b.chart, b.x));
}

Vec vertical_tension_components(const Section& s, const PointRef& x, double fd_step) {
    const PointRef point = s.at(x);
    return vertical_part(*s.bundle, point, tension_at(s, x, fd_step));
}

TensionReport vertical_tension(const Section& s, const PointRef& x, double fd_step) {
    if (!s.bundle->base().in_domain({x.chart, x.x}))
        throw GeometryError(ErrorKind::ChartEscape, "tension point outside its chart");
    TensionReport rep;
    rep.point = x;
    rep.fd_step = fd_step;
    const PointRef point = s.at(x);
    rep.tension = tension_at(s, x, fd_step);
    rep.vertical = vertical_part(*s.bundle, point, rep.tension);
    const Vec half = vertical_part(*s.bundle, point, tension_at(s, x, fd_step / 2));
    rep.estimated_error = (rep.vertical - half).norm();
    return rep;
}

TensionReport horizontal_tension(const Section& s, const PointRef& p, double fd_step) {
    TensionReport rep;
    rep.point = p;
    rep.fd_step = fd_step;
    rep.horizontal = horizontal_tension_at(s, p, fd_step);
    rep.estimated_error = (rep.horizontal - horizontal_tension_at(s, p, fd_step / 2)).norm();
    return rep;
}

Vec frame_components(const AssociatedBundle& e, const PointRef& p, const Vec& vertical) {
    const int n = e.base_dim();
    return lift_value(e, p.chart, p.x.head(n), e.principal().angle(p), vertical);
}

std::vector<std::vector<RealPath>> vertical_integrals(const Section& s, const PathEnsemble& base) {
    std::vector<SamplePath> pushed(base.paths.size());
    parallel_for(base.paths.size(), [&](std::size_t i) {
        const SamplePath& b = base.paths[i];
        pushed[i].time = b.time;
        pushed[i].states.reserve(b.size());
        for (const auto& x : b.states) pushed[i].states.push_back(s.at(x));
    });
    return vertical_rows(*s.bundle, pushed);
}

std::vector<DriftVerdict> vertical_martingale_test(const Section& s, const PathEnsemble& base, double resolution) {
    return verdicts_for(vertical_integrals(s, base), resolution, "theta^");
}

std::vector<double> predicted_vertical_drift(const Section& s, const PathEnsemble& base, int stride, double fd_step) {
    const int r = s.bundle->fiber_dim();
    stride = std::max(stride, 1);
    std::vector<Vec> per_path(base.paths.size());
    parallel_for(base.paths.size(), [&](std::size_t i) {
        const SamplePath& path = base.paths[i];
        Vec acc = Vec::Zero(r);
        const std::size_t steps = path.size() - 1;
        for (std::size_t k = 0; k < steps; k += static_cast<std::size_t>(stride)) {
            const std::size_t end = std::min(steps, k + static_cast<std::size_t>(stride));
            acc += 0.5 * vertical_tension_components(s, path.states[k], fd_step) * (path.time[end] - path.time[k]);
        }
        per_path[i] = acc / path.horizon();
    });
    std::vector<double> out(static_cast<std::size_t>(r), 0.0);
    for (const Vec& v : per_path)
        for (int a = 0; a < r; ++a) out[static_cast<std::size_t>(a)] += v[a] / static_cast<double>(per_path.size());
    return out;
}

std::vector<std::vector<Vec>> lifted_values(const Section& s, const PathEnsemble& base, double v0) {
    const PrincipalBundle& p = s.bundle->principal();
    std::vector<std::vector<Vec>> out(base.paths.size());
    parallel_for(base.paths.size(), [&](std::size_t i) {
        const SamplePath lift = p.horizontal_lift_path(base.paths[i], v0);
        out[i].reserve(lift.size());
        for (const auto& u : lift.states) out[i].push_back(equivariant_lift(s, u));
    });
    return out;
}

std::vector<DriftVerdict> horizontally_harmonic_test(const Section& s, const PathEnsemble& base, double resolution,
                                                     double v0) {
    const auto values = lifted_values(s, base, v0);
    return verdicts_for(increment_paths(values, base, s.bundle->fiber_dim()), resolution, "dxi^");
}

std::vector<std::vector<Vec>> fiber_processes(int r, const PathEnsemble& grid_source, const Vec& xi0, const Vec& drift,
                                              std::uint64_t seed) {
    std::vector<std::vector<Vec>> out(grid_source.paths.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        NormalStream rng(stream_seed(seed, i, 0x6669626572ULL));
        const auto& time = grid_source.paths[i].time;
        out[i].push_back(xi0);
        for (std::size_t k = 0; k + 1 < time.size(); ++k) {
            const double dt = time[k + 1] - time[k];
            out[i].push_back(out[i].back() + std::sqrt(dt) * rng.next(r) + drift * dt);
        }
    }
    return out;
}

FiberMartingaleResult fiber_martingale_check(const AssociatedBundle& e, const PathEnsemble& horizontal,
                            const std::vector<std::vector<Vec>>& xi, double resolution) {
    if (xi.size() != horizontal.paths.size())
        throw GeometryError(ErrorKind::InvalidArgument, "one fiber process per horizontal path is required");
    std::vector<SamplePath> x(horizontal.paths.size());
    std::vector<std::vector<Vec>> recovered(horizontal.paths.size());
    parallel_for(x.size(), [&](std::size_t i) {
        x[i] = mu_path(e, horizontal.paths[i], xi[i]);
        for (std::size_t k = 0; k < x[i].size(); ++k)
            recovered[i].push_back(e.mu_inverse(horizontal.paths[i].states[k], x[i].states[k]));
    });
    FiberMartingaleResult out;
    out.vertical = verdicts_for(vertical_rows(e, x), resolution, "theta^");
    out.fiber = verdicts_for(increment_paths(recovered, horizontal, e.fiber_dim()), resolution, "dxi^");
    out.vertical_decision = combine(out.vertical);
    out.fiber_decision = combine(out.fiber);
    return out;
}

double parallelism_check(const Section& s, const std::vector<PointRef>& points, double fd_step) {
    const AssociatedBundle& e = *s.bundle;
    double worst = 0.0;
    for (const auto& x : points) {
        const PointRef point = s.at(x);
        const Mat dnu = fd_jacobian([&](const Vec& y) { return s.fiber(x.chart, y); }, x.x, fd_step);
        const Mat cov = dnu + e.coframe_shift(point);
        const Mat l = e.frame(x.chart, x.x);
        const Mat fib = (l * l.transpose()).inverse();
        const Mat frame = e.base().inverse_sqrt_metric(x);
        for (int i = 0; i < frame.cols(); ++i) {
            const Vec w = cov * frame.col(i);
            worst = std::max(worst, std::sqrt(w.dot(fib * w)));
        }
    }
    return worst;
}

double component_gradient_max(const Section& s, const std::vector<PointRef>& points, double fd_step) {
    double worst = 0.0;
    for (const auto& x : points) {
        const Mat dnu = fd_jacobian([&](const Vec& y) { return s.fiber(x.chart, y); }, x.x, fd_step);
        worst = std::max(worst, dnu.cwiseAbs().maxCoeff());
    }
    return worst;
}

std::vector<PointRef> sample_points(const ChartedManifold& base, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = base.dim();
    const bool stereographic = base.chart(0).name == "north";
    std::vector<PointRef> out;
    while (static_cast<int>(out.size()) < count) {
        Vec x(n);
        if (stereographic) {
            for (int i = 0; i < n; ++i) x[i] = -1.4 + 2.8 * unit(rng);
            if (x.norm() >= 1.4) continue;
        } else {
            for (int i = 0; i < n; ++i) x[i] = 2 * std::numbers::pi * unit(rng);
        }
        out.push_back({0, x});
    }
    return out;
}

std::vector<PointRef> sample_frames(const PrincipalBundle& p, int count, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::vector<PointRef> out;
    for (const auto& x : sample_points(p.base(), count, seed)) out.push_back(p.point(x, angle(rng)));
    return out;
}

Section zero_section(AssociatedPtr e) {
    const int r = e->fiber_dim();
    return {"zero", std::move(e), [r](ChartId, const Vec&) { return Vec(Vec::Zero(r)); }};
}

Section constant_section(AssociatedPtr e, const Vec& nu) {
    if (nu.size() != e->fiber_dim()) throw GeometryError(ErrorKind::InvalidArgument, "constant section has wrong size");
    return {"constant", std::move(e), [nu](ChartId, const Vec&) { return nu; }};
}

Section torus_sin_section(AssociatedPtr e) {
    return {"sin-field", std::move(e), [](ChartId, const Vec& x) { return make_vec({std::sin(x[0]), 0.0}); }};
}

Section torus_mixed_section(AssociatedPtr e) {
    return {"mixed-field", std::move(e),
            [](ChartId, const Vec& x) { return make_vec({0.5 * std::sin(x[1]), 0.4 * std::cos(x[0])}); }};
}

Section sphere_height_gradient_section(AssociatedPtr e, double c) {
    if (e->base().name() != "sphere2")
        throw GeometryError(ErrorKind::InvalidArgument, "height gradient needs the unit sphere as base");
    return {"grad-height", std::move(e), [c](ChartId chart, const Vec& x) {
                return Vec(chart == kNorth ? Vec(-c * x) : Vec(c * x));
            }};
}

Section hopf_tapered_section(AssociatedPtr e, const Vec& xi) {
    if (xi.size() != e->fiber_dim()) throw GeometryError(ErrorKind::InvalidArgument, "fiber vector has wrong size");
    return {"tapered-constant", std::move(e), [xi](ChartId chart, const Vec& x) {
                const double scale = 1.0 / std::sqrt(1.0 + x.squaredNorm());
                if (chart == kNorth) return Vec(scale * xi);
                Vec out(xi.size());
                for (Eigen::Index k = 0; k + 1 < xi.size(); k += 2) {
                    out[k] = scale * (x[0] * xi[k] - x[1] * xi[k + 1]);
                    out[k + 1] = scale * (x[0] * xi[k + 1] + x[1] * xi[k]);
                }
                return out;
            }};
}

}  // namespace bundlemart
