#include "bundlemart/spaces.hpp"

#include <cmath>
#include <numbers>

namespace bundlemart {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec flip_last(Vec x) {
    x[x.size() - 1] = -x[x.size() - 1];
    return x;
}

Vec invert(const Vec& x) { return flip_last(x) / x.squaredNorm(); }

}  // namespace

double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0) w += kTwoPi;
    if (w >= kTwoPi) w -= kTwoPi;
    return w;
}

double wrap_signed(double a) {
    double w = wrap_angle(a);
    return w > std::numbers::pi ? w - kTwoPi : w;
}

Christoffel conformal_christoffel(const Vec& grad_f) {
    const int n = static_cast<int>(grad_f.size());
    Christoffel gam(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double v = 0.0;
                if (i == j) v += grad_f[k];
                if (i == k) v += grad_f[j];
                if (j == k) v -= grad_f[i];
                gam(i, j, k) = v;
            }
    return gam;
}

ManifoldPtr make_flat(int n) {
    Chart c{"R" + std::to_string(n), n, [](const Vec&) { return true; }, [](const Vec&) { return true; }, {}};
    auto m = std::make_shared<ChartedManifold>("flat-r" + std::to_string(n), n, std::vector<Chart>{c},
                                               [n](ChartId, const Vec&) { return Mat(Mat::Identity(n, n)); });
    m->with_christoffel([n](ChartId, const Vec&) { return Christoffel(n); })
        .with_conformal_factor([](ChartId, const Vec&) { return 1.0; })
        .with_brownian_drift([n](ChartId, const Vec&) { return Vec(Vec::Zero(n)); });
    return m;
}

ManifoldPtr make_sphere(int n, double radius) {
    auto domain = [](const Vec& x) { return x.squaredNorm() < 100.0; };
    auto safe = [](const Vec& x) { return x.squaredNorm() < 2.25; };
    auto to_other = [](const Vec& x) { return invert(x); };
    Chart north{"north", n, domain, safe, {{kSouth, to_other}}};
    Chart south{"south", n, domain, safe, {{kNorth, to_other}}};
    const double r2 = 4.0 * radius * radius;
    std::string name = "sphere" + std::to_string(n);
    if (radius != 1.0) name += radius == 0.5 ? "-half" : "-r" + std::to_string(radius);
    auto m = std::make_shared<ChartedManifold>(name, n, std::vector<Chart>{north, south},
                                               [n, r2](ChartId, const Vec& x) {
                                                   const double d = 1.0 + x.squaredNorm();
                                                   return Mat(Mat::Identity(n, n) * (r2 / (d * d)));
                                               });
    m->with_christoffel([](ChartId, const Vec& x) { return conformal_christoffel(-2.0 * x / (1.0 + x.squaredNorm())); })
        .with_conformal_factor([radius](ChartId, const Vec& x) { return 2.0 * radius / (1.0 + x.squaredNorm()); })
        .with_brownian_drift([n, radius](ChartId, const Vec& x) {
            // (n - 2)/2 * lambda^{-2} grad f with lambda = 2R/(1+|x|^2), f = log lambda
            const double d = 1.0 + x.squaredNorm();
            const double lam = 2.0 * radius / d;
            return Vec(0.5 * (n - 2) / (lam * lam) * (-2.0 * x / d));
        });
    return m;
}

namespace {

ManifoldPtr make_periodic(int n, const std::string& name) {
    auto wrap_all = [](const Vec& x) {
        Vec y = x;
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = wrap_angle(y[i]);
        return y;
    };
    Chart cover{"cover", n, [](const Vec&) { return true; }, [](const Vec&) { return true; },
                {{kFundamental, wrap_all}}};
    Chart fundamental{"fundamental", n,
                      [](const Vec& x) { return (x.array() >= 0.0).all() && (x.array() < kTwoPi).all(); },
                      [](const Vec& x) { return (x.array() > 0.05).all() && (x.array() < kTwoPi - 0.05).all(); },
                      {{kCover, [](const Vec& x) { return x; }}}};
    auto m = std::make_shared<ChartedManifold>(name, n, std::vector<Chart>{cover, fundamental},
                                               [n](ChartId, const Vec&) { return Mat(Mat::Identity(n, n)); });
    m->with_christoffel([n](ChartId, const Vec&) { return Christoffel(n); })
        .with_conformal_factor([](ChartId, const Vec&) { return 1.0; })
        .with_brownian_drift([n](ChartId, const Vec&) { return Vec(Vec::Zero(n)); });
    return m;
}

}  // namespace

ManifoldPtr make_torus() { return make_periodic(2, "torus2"); }

ManifoldPtr make_circle() { return make_periodic(1, "circle"); }

double sphere_radius(const ChartedManifold& m) {
    return 0.5 * std::sqrt(m.metric({kNorth, Vec::Zero(m.dim())})(0, 0));
}

Vec sphere_embed(const ChartedManifold& m, const PointRef& p) {
    const double radius = sphere_radius(m);
    const int n = m.dim();
    const double r2 = p.x.squaredNorm();
    Vec out(n + 1);
    Vec y = p.chart == kSouth ? flip_last(p.x) : p.x;
    out.head(n) = 2.0 * y / (1.0 + r2);
    out[n] = (1.0 - r2) / (1.0 + r2) * (p.chart == kSouth ? -1.0 : 1.0);
    return radius * out;
}

Mat sphere_embed_jacobian(const ChartedManifold& m, const PointRef& p) {
    return fd_jacobian([&](const Vec& x) { return sphere_embed(m, {p.chart, x}); }, p.x, 1e-4);
}

PointRef sphere_point(const ChartedManifold& m, const Vec& embedded) {
    const int n = m.dim();
    const Vec u = embedded / embedded.norm();
    if (u[n] >= 0.0) return {kNorth, Vec(u.head(n) / (1.0 + u[n]))};
    return {kSouth, flip_last(Vec(u.head(n) / (1.0 - u[n])))};
}

}  // namespace bundlemart
