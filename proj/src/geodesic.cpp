#include "bundlemart/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace bundlemart {

std::vector<ChartId> SamplePath::chart_log() const {
    std::vector<ChartId> log;
    log.reserve(states.size());
    for (const auto& s : states) log.push_back(s.chart);
    return log;
}

void SamplePath::validate() const {
    if (time.size() != states.size()) throw GeometryError(ErrorKind::InvalidArgument, "time/state length mismatch");
    if (!time.empty() && time.front() != 0.0) throw GeometryError(ErrorKind::InvalidArgument, "grid must start at 0");
    for (std::size_t k = 1; k < time.size(); ++k)
        if (!(time[k] > time[k - 1])) throw GeometryError(ErrorKind::InvalidArgument, "grid not strictly increasing");
}

namespace {

struct Phase {
    Vec x;
    Vec u;
};

Phase geodesic_rhs(const ChartedManifold& m, ChartId chart, const Phase& s) {
    const Christoffel gam = m.christoffel({chart, s.x});
    return {s.u, -gam.contract(s.u, s.u)};
}

Phase rk4_step(const ChartedManifold& m, ChartId chart, const Phase& s, double h) {
    const Phase k1 = geodesic_rhs(m, chart, s);
    const Phase k2 = geodesic_rhs(m, chart, {s.x + 0.5 * h * k1.x, s.u + 0.5 * h * k1.u});
    const Phase k3 = geodesic_rhs(m, chart, {s.x + 0.5 * h * k2.x, s.u + 0.5 * h * k2.u});
    const Phase k4 = geodesic_rhs(m, chart, {s.x + h * k3.x, s.u + h * k3.u});
    return {s.x + h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x), s.u + h / 6.0 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u)};
}

void switch_if_needed(const ChartedManifold& m, PointRef& p, Vec& u) {
    const PointRef q = m.to_safe_chart(p);
    if (q.chart != p.chart) {
        u = m.transition_jacobian(p, q.chart) * u;
        p = q;
    }
}

}  // namespace

GeodesicEnd integrate_geodesic(const ChartedManifold& m, const PointRef& p, const Vec& v, double t_final,
                               int n_steps) {
    PointRef cur = m.to_safe_chart(p);
    Vec u = cur.chart == p.chart ? v : Vec(m.transition_jacobian(p, cur.chart) * v);
    if (n_steps <= 0 || t_final == 0.0) return {cur, u};
    const double h = t_final / n_steps;
    for (int s = 0; s < n_steps; ++s) {
        Phase next = rk4_step(m, cur.chart, {cur.x, u}, h);
        cur.x = next.x;
        u = next.u;
        switch_if_needed(m, cur, u);
    }
    return {cur, u};
}

SamplePath geodesic_shoot(const ChartedManifold& m, const PointRef& p, const Vec& v, double length, double step) {
    if (!(step > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "geodesic step must be positive");
    SamplePath path;
    path.time.push_back(0.0);
    path.states.push_back(p);
    const double speed = m.norm(p, v);
    if (length <= 0.0 || speed == 0.0) return path;

    PointRef cur = p;
    Vec u = v / speed;
    const int n = static_cast<int>(std::ceil(length / step - 1e-9));
    const double h = length / n;
    for (int s = 1; s <= n; ++s) {
        Phase next = rk4_step(m, cur.chart, {cur.x, u}, h);
        cur.x = next.x;
        u = next.u;
        switch_if_needed(m, cur, u);
        path.time.push_back(s * h);
        path.states.push_back(cur);
    }
    return path;
}

namespace {

bool offset_between(const ChartedManifold& m, const PointRef& a, const PointRef& target, Vec& out) {
    if (m.can_transition(a, target.chart)) {
        out = m.transition(a, target.chart).x - target.x;
        return true;
    }
    if (m.can_transition(target, a.chart)) {
        out = a.x - m.transition(target, a.chart).x;
        return true;
    }
    return false;
}

}  // namespace

namespace {

struct Shot {
    Vec velocity;
    double miss = 0.0;
    int iterations = 0;
};

// Damped Newton iteration on the endpoint miss of exp_p(v) against q.
Shot newton_shoot(const ChartedManifold& m, const PointRef& p, const PointRef& q, Vec v,
                  const DistanceOptions& options) {
    const int n = m.dim();
    auto miss = [&](const Vec& vel, Vec& f) {
        const GeodesicEnd end = integrate_geodesic(m, p, vel, 1.0, options.steps);
        return offset_between(m, end.point, q, f);
    };
    Shot shot{v, std::numeric_limits<double>::infinity(), 0};
    Vec f;
    if (!miss(v, f)) return shot;
    shot.miss = f.norm();
    for (; shot.iterations < options.max_iterations && shot.miss > options.tolerance; ++shot.iterations) {
        const double h = 1e-6 * std::max(1.0, v.norm());
        Mat jac(n, n);
        bool ok = true;
        for (int k = 0; k < n && ok; ++k) {
            Vec vp = v, vm = v, fp, fm;
            vp[k] += h;
            vm[k] -= h;
            ok = miss(vp, fp) && miss(vm, fm);
            if (ok) jac.col(k) = (fp - fm) / (2 * h);
        }
        if (!ok) break;
        Eigen::FullPivLU<Mat> lu(jac);
        if (!lu.isInvertible()) break;
        const Vec delta = lu.solve(-f);
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 20; ++ls) {
            Vec trial = v + lambda * delta, ft;
            if (miss(trial, ft) && ft.norm() < shot.miss) {
                v = trial;
                f = ft;
                shot.miss = ft.norm();
                shot.velocity = trial;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }
    return shot;
}

}  // namespace

DistanceResult distance_estimate(const ChartedManifold& m, const PointRef& p, const PointRef& q,
                                 const DistanceOptions& options) {
    DistanceResult result;
    const int n = m.dim();
    result.initial_velocity = Vec::Zero(n);
    if (p.chart == q.chart && p.x == q.x) {
        result.converged = true;
        return result;
    }

    // Chord guesses from every chart holding both points, pulled back to the chart of p and
    // rescaled; the shortest converged geodesic wins, so a long arc found first is discarded.
    std::vector<Vec> guesses;
    for (ChartId c = 0; c < static_cast<ChartId>(m.atlas().size()); ++c) {
        if (!m.can_transition(p, c) || !m.can_transition(q, c)) continue;
        const PointRef pc = m.transition(p, c);
        const Vec chord = m.transition(q, c).x - pc.x;
        const Vec v = c == p.chart ? chord : Vec(m.transition_jacobian(pc, p.chart) * chord);
        for (double scale : {1.0, 0.6, 1.6}) guesses.push_back(scale * v);
    }
    if (guesses.empty()) throw GeometryError(ErrorKind::NonConvergence, "no common chart for an initial shooting guess");

    bool have = false;
    Shot best;
    double best_length = std::numeric_limits<double>::infinity();
    for (const Vec& g : guesses) {
        const Shot s = newton_shoot(m, p, q, g, options);
        result.iterations += s.iterations;
        const bool conv = s.miss <= options.tolerance;
        const double len = m.norm(p, s.velocity);
        const bool best_conv = have && best.miss <= options.tolerance;
        if (!have || (conv && (!best_conv || len < best_length)) || (!conv && !best_conv && s.miss < best.miss)) {
            best = s;
            best_length = len;
            have = true;
        }
    }
    result.miss = best.miss;
    result.converged = best.miss <= options.tolerance;
    result.initial_velocity = best.velocity;
    result.distance = best_length;
    return result;
}

double curve_length(const ChartedManifold& m, ChartId chart, const std::function<Vec(double)>& curve, double t0,
                    double t1, int intervals) {
    if (intervals % 2) ++intervals;
    const double h = (t1 - t0) / intervals;
    const double dh = 1e-5 * std::max(1.0, std::abs(t1 - t0));
    auto speed = [&](double t) {
        const Vec vel = (-curve(t + 2 * dh) + 8.0 * curve(t + dh) - 8.0 * curve(t - dh) + curve(t - 2 * dh)) / (12 * dh);
        return m.norm({chart, curve(t)}, vel);
    };
    double sum = speed(t0) + speed(t1);
    for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * speed(t0 + i * h);
    return sum * h / 3.0;
}

}  // namespace bundlemart
