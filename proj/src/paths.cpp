#include "bundlemart/paths.hpp"
#include "bundlemart/geodesic.hpp"
#include "bundlemart/parallel.hpp"
#include "bundlemart/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace bundlemart {

std::string to_string(StepScheme s) {
    return s == StepScheme::Euler ? "euler" : "geodesic_retraction";
}

StepScheme step_scheme_from_string(const std::string& s) {
    if (s == "euler") return StepScheme::Euler;
    if (s == "geodesic_retraction") return StepScheme::GeodesicRetraction;
    throw GeometryError(ErrorKind::InvalidArgument, "unknown step scheme '" + s + "'");
}

PointRef brownian_step(const ChartedManifold& m, const PointRef& p, const Vec& dw, double dt,
                       const BrownianOptions& options) {
    const Mat s = m.inverse_sqrt_metric(p);
    PointRef q;
    if (options.scheme == StepScheme::Euler) {
        q = PointRef{p.chart, p.x + s * dw + m.brownian_drift(p) * dt};
    } else {
        // exp_p(S dW) carries the -1/2 Gamma(S dW, S dW) correction in its second-order term
        q = integrate_geodesic(m, p, s * dw, 1.0, 2).point;
        if (q.chart != p.chart && m.can_transition(q, p.chart)) q = m.transition(q, p.chart);
    }
    if (options.drift) q.x += options.drift(p) * dt;
    if (!m.in_domain(q))
        throw GeometryError(ErrorKind::ChartEscape, "Brownian step left chart '" + m.chart(q.chart).name + "'");
    return m.to_safe_chart(q);
}

int grid_steps(double horizon, double dt) {
    if (!(dt > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "dt must be positive");
    if (!(horizon >= dt * (1 - 1e-12))) throw GeometryError(ErrorKind::InvalidArgument, "horizon must be at least dt");
    return static_cast<int>(std::llround(horizon / dt));
}

SamplePath simulate_brownian_path(const ChartedManifold& m, const PointRef& x0, double horizon, double dt,
                                  std::uint64_t stream, const BrownianOptions& options) {
    const int n = grid_steps(horizon, dt);
    NormalStream rng(stream);
    const double sq = std::sqrt(dt);
    SamplePath path;
    path.time.reserve(static_cast<std::size_t>(n) + 1);
    path.states.reserve(static_cast<std::size_t>(n) + 1);
    path.time.push_back(0.0);
    path.states.push_back(m.to_safe_chart(x0));
    for (int k = 1; k <= n; ++k) {
        const Vec dw = rng.next(m.dim()) * sq;
        path.states.push_back(brownian_step(m, path.states.back(), dw, dt, options));
        path.time.push_back(k * dt);
    }
    return path;
}

PathEnsemble simulate_brownian(const ChartedManifold& m, const PointRef& x0, double horizon, double dt, int n_paths,
                               std::uint64_t seed, const BrownianOptions& options) {
    if (n_paths <= 0) throw GeometryError(ErrorKind::InvalidArgument, "n_paths must be positive");
    grid_steps(horizon, dt);
    PathEnsemble ens;
    ens.seed = seed;
    ens.dt = dt;
    ens.generator_tag = "brownian/" + m.name() + "/" + to_string(options.scheme);
    ens.paths.resize(static_cast<std::size_t>(n_paths));
    parallel_for(ens.paths.size(), [&](std::size_t i) {
        ens.paths[i] = simulate_brownian_path(m, x0, horizon, dt, stream_seed(seed, i, options.salt), options);
    });
    return ens;
}

Vec chart_increment(const ChartedManifold& m, const PointRef& from, const PointRef& to) {
    if (to.chart == from.chart) return to.x - from.x;
    return m.transition(to, from.chart).x - from.x;
}

ConnectionField levi_civita(const ChartedManifold& m) {
    return [&m](const PointRef& p) { return m.christoffel(p); };
}

ConnectionField flat_connection(int dim) {
    return [dim](const PointRef&) { return Christoffel(dim); };
}

namespace {

double bracket_term(const Christoffel& gam, const Vec& form, const Vec& dx) {
    // Gamma^i_{jk} theta_i dx^j dx^k only sees the symmetric part in (j, k)
    double s = 0.0;
    const int n = gam.dim();
    for (int i = 0; i < n; ++i) {
        if (form[i] == 0.0) continue;
        double q = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) q += gam(i, j, k) * dx[j] * dx[k];
        s += form[i] * q;
    }
    return s;
}

RealPath start_like(const SamplePath& path) {
    path.validate();
    RealPath out;
    out.time = path.time;
    out.values.assign(path.time.size(), 0.0);
    return out;
}

template <class StepFn>
RealPath accumulate(const SamplePath& path, StepFn&& step) {
    RealPath out = start_like(path);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        acc += step(path.states[k], path.states[k + 1]);
        out.values[k + 1] = acc;
    }
    return out;
}

}  // namespace

RealPath ito_integral(const ChartedManifold& m, const OneFormField& theta, const SamplePath& path,
                      const ConnectionField& connection) {
    return accumulate(path, [&](const PointRef& a, const PointRef& b) {
        const Vec dx = chart_increment(m, a, b);
        const Vec form = theta(a);
        if (form.size() != m.dim()) throw GeometryError(ErrorKind::InvalidArgument, "form has wrong dimension");
        if (form.isZero(0.0)) return 0.0;
        return form.dot(dx) + 0.5 * bracket_term(connection(a), form, dx);
    });
}

RealPath quadratic_integral(const ChartedManifold& m, const BilinearField& b, const SamplePath& path) {
    return accumulate(path, [&](const PointRef& a, const PointRef& c) {
        const Vec dx = chart_increment(m, a, c);
        return dx.dot(b(a) * dx);
    });
}

RealPath stratonovich_integral(const ChartedManifold& m, const OneFormField& theta, const SamplePath& path) {
    return accumulate(path, [&](const PointRef& a, const PointRef& b) {
        const Vec dx = chart_increment(m, a, b);
        return theta(PointRef{a.chart, a.x + 0.5 * dx}).dot(dx);
    });
}

RealPath trapezoid_integral(const ChartedManifold& m, const OneFormField& theta, const SamplePath& path) {
    return accumulate(path, [&](const PointRef& a, const PointRef& b) {
        const Vec dx = chart_increment(m, a, b);
        return 0.5 * (theta(a) + theta(PointRef{a.chart, a.x + dx})).dot(dx);
    });
}

MapJet map_jet(const ManifoldMap& f, const PointRef& p, double h) {
    MapJet jet;
    jet.image = f.apply(p);
    const int n = f.source->dim();
    const int r = f.target->dim();
    const Chart& src = f.source->chart(p.chart);
    auto eval = [&](const Vec& x) {
        if (!src.in_domain(x))
            throw GeometryError(ErrorKind::ChartEscape, "finite-difference stencil leaves chart '" + src.name + "'");
        return f.target->coords_in(f.apply(PointRef{p.chart, x}), jet.image.chart);
    };
    const Vec f0 = jet.image.x;
    jet.jacobian = Mat::Zero(r, n);
    jet.hessian.assign(static_cast<std::size_t>(r), Mat::Zero(n, n));
    std::vector<Vec> plus(static_cast<std::size_t>(n)), minus(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        Vec xp = p.x, xm = p.x;
        xp[j] += h;
        xm[j] -= h;
        plus[static_cast<std::size_t>(j)] = eval(xp);
        minus[static_cast<std::size_t>(j)] = eval(xm);
        jet.jacobian.col(j) = (plus[static_cast<std::size_t>(j)] - minus[static_cast<std::size_t>(j)]) / (2 * h);
        const Vec d2 = (plus[static_cast<std::size_t>(j)] - 2.0 * f0 + minus[static_cast<std::size_t>(j)]) / (h * h);
        for (int a = 0; a < r; ++a) jet.hessian[static_cast<std::size_t>(a)](j, j) = d2[a];
    }
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            Vec pp = p.x, pm = p.x, mp = p.x, mm = p.x;
            pp[j] += h, pp[k] += h;
            pm[j] += h, pm[k] -= h;
            mp[j] -= h, mp[k] += h;
            mm[j] -= h, mm[k] -= h;
            const Vec d2 = (eval(pp) - eval(pm) - eval(mp) + eval(mm)) / (4 * h * h);
            for (int a = 0; a < r; ++a) {
                jet.hessian[static_cast<std::size_t>(a)](j, k) = d2[a];
                jet.hessian[static_cast<std::size_t>(a)](k, j) = d2[a];
            }
        }
    return jet;
}

namespace {

std::vector<Mat> beta_from_jet(const MapJet& jet, const Christoffel& gm, const Christoffel& gn) {
    const Eigen::Index r = jet.jacobian.rows();
    const Eigen::Index n = jet.jacobian.cols();
    std::vector<Mat> beta = jet.hessian;
    for (Eigen::Index a = 0; a < r; ++a) {
        Mat& b = beta[static_cast<std::size_t>(a)];
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k) {
                double v = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) v -= gm(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)) * jet.jacobian(a, i);
                for (Eigen::Index bb = 0; bb < r; ++bb)
                    for (Eigen::Index c = 0; c < r; ++c)
                        v += gn(static_cast<int>(a), static_cast<int>(bb), static_cast<int>(c)) * jet.jacobian(bb, j) *
                             jet.jacobian(c, k);
                b(j, k) += v;
            }
        b = 0.5 * (b + b.transpose()).eval();
    }
    return beta;
}

}  // namespace

std::vector<Mat> second_fundamental_form(const ManifoldMap& f, const PointRef& p, const ConnectionField& conn_m,
                                         const ConnectionField& conn_n, double fd_step) {
    const MapJet jet = map_jet(f, p, fd_step);
    return beta_from_jet(jet, conn_m(p), conn_n(jet.image));
}

RealPath GeometricItoTerms::residual() const {
    RealPath out = lhs;
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = lhs.values[k] - pullback.values[k] - second_order.values[k];
    return out;
}

GeometricItoTerms geometric_ito_terms(const ManifoldMap& f, const OneFormField& theta, const SamplePath& path,
                                      const ConnectionField& conn_m, const ConnectionField& conn_n, double fd_step) {
    GeometricItoTerms out{start_like(path), start_like(path), start_like(path)};
    double lhs = 0.0, pb = 0.0, so = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const PointRef& a = path.states[k];
        const Vec dx = chart_increment(*f.source, a, path.states[k + 1]);
        const MapJet jet = map_jet(f, a, fd_step);
        const Vec df = f.target->coords_in(f.apply(path.states[k + 1]), jet.image.chart) - jet.image.x;
        const Vec form = theta(jet.image);
        const Christoffel gm = conn_m(a);
        const Christoffel gn = conn_n(jet.image);

        lhs += form.dot(df) + 0.5 * bracket_term(gn, form, df);
        const Vec pulled = jet.jacobian.transpose() * form;
        pb += pulled.dot(dx) + 0.5 * bracket_term(gm, pulled, dx);
        const auto beta = beta_from_jet(jet, gm, gn);
        double q = 0.0;
        for (std::size_t c = 0; c < beta.size(); ++c) q += form[static_cast<Eigen::Index>(c)] * dx.dot(beta[c] * dx);
        so += 0.5 * q;

        out.lhs.values[k + 1] = lhs;
        out.pullback.values[k + 1] = pb;
        out.second_order.values[k + 1] = so;
    }
    return out;
}

RealPath geometric_ito_residual(const ManifoldMap& f, const OneFormField& theta, const SamplePath& path,
                                const ConnectionField& conn_m, const ConnectionField& conn_n, double fd_step) {
    return geometric_ito_terms(f, theta, path, conn_m, conn_n, fd_step).residual();
}

std::string to_string(Decision d) {
    switch (d) {
    case Decision::MartingaleConsistent: return "martingale-consistent";
    case Decision::DriftDetected: return "drift-detected";
    case Decision::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

SampleStats sample_stats(const std::vector<double>& values) {
    SampleStats s;
    s.n = static_cast<int>(values.size());
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.variance = ss / (s.n - 1);
        s.standard_error = std::sqrt(s.variance / s.n);
    }
    return s;
}

std::vector<double> terminal_values(const std::vector<RealPath>& paths) {
    std::vector<double> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(p.terminal());
    return out;
}

DriftVerdict drift_test(const std::vector<RealPath>& paths, double resolution) {
    DriftVerdict v;
    v.resolution = resolution;
    v.n_paths = static_cast<int>(paths.size());
    if (paths.empty()) return v;
    const double horizon = paths.front().time.empty() ? 0.0 : paths.front().time.back();
    if (!(horizon > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "drift test needs a positive horizon");
    std::vector<double> rates;
    rates.reserve(paths.size());
    double scale = 1.0;
    for (const auto& p : paths) {
        if (p.time.empty() || std::abs(p.time.back() - horizon) > 1e-9 * horizon)
            throw GeometryError(ErrorKind::InvalidArgument, "drift test needs a common time grid");
        rates.push_back(p.terminal() / horizon);
        scale = std::max(scale, std::abs(rates.back()));
    }
    const SampleStats s = sample_stats(rates);
    const double half = 1.959963984540054 * s.standard_error;
    v.drift_estimate = s.mean;
    v.ci_low = s.mean - half;
    v.ci_high = s.mean + half;
    if (v.n_paths < kMinDriftPaths) return v;
    const double eps = 1e-12 * scale;
    const bool contains_zero = v.ci_low - eps <= 0.0 && 0.0 <= v.ci_high + eps;
    if (!contains_zero)
        v.decision = Decision::DriftDetected;
    else if (v.ci_high - v.ci_low <= resolution)
        v.decision = Decision::MartingaleConsistent;
    else
        v.decision = Decision::Inconclusive;
    return v;
}

Decision combine(const std::vector<DriftVerdict>& verdicts) {
    if (verdicts.empty()) return Decision::Inconclusive;
    bool inconclusive = false;
    for (const auto& v : verdicts) {
        if (v.decision == Decision::DriftDetected) return Decision::DriftDetected;
        if (v.decision == Decision::Inconclusive) inconclusive = true;
    }
    return inconclusive ? Decision::Inconclusive : Decision::MartingaleConsistent;
}

void write_ensemble_csv(std::ostream& os, const PathEnsemble& ensemble) {
    const int dim = ensemble.paths.empty() || ensemble.paths.front().states.empty()
                        ? 0
                        : static_cast<int>(ensemble.paths.front().states.front().x.size());
    os << "path_id,t,chart";
    for (int i = 0; i < dim; ++i) os << ",x" << i;
    os << '\n' << std::setprecision(17);
    for (std::size_t id = 0; id < ensemble.paths.size(); ++id) {
        const auto& p = ensemble.paths[id];
        for (std::size_t k = 0; k < p.size(); ++k) {
            os << id << ',' << p.time[k] << ',' << p.states[k].chart;
            for (int i = 0; i < dim; ++i) os << ',' << p.states[k].x[i];
            os << '\n';
        }
    }
}

void write_realpaths_csv(std::ostream& os, const std::vector<RealPath>& paths) {
    os << "path_id,t,value\n" << std::setprecision(17);
    for (std::size_t id = 0; id < paths.size(); ++id)
        for (std::size_t k = 0; k < paths[id].values.size(); ++k)
            os << id << ',' << paths[id].time[k] << ',' << paths[id].values[k] << '\n';
}

}  // namespace bundlemart
