#include "bundlemart/coupling.hpp"
#include "bundlemart/parallel.hpp"
#include "bundlemart/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bundlemart {

namespace {

enum class Shape { Sphere, Periodic, Flat };

Shape shape_of(const ChartedManifold& m) {
    const std::string& n = m.name();
    if (n.rfind("sphere", 0) == 0) return Shape::Sphere;
    if (n.rfind("torus", 0) == 0 || n == "circle") return Shape::Periodic;
    if (n.rfind("flat", 0) == 0) return Shape::Flat;
    throw GeometryError(ErrorKind::InvalidArgument, "no coupling construction for manifold '" + n + "'");
}

// Point coordinates in a common ambient space: embedding for spheres, chart coordinates otherwise.
Vec ambient(const ChartedManifold& m, Shape shape, const PointRef& p) {
    return shape == Shape::Sphere ? sphere_embed(m, p) : p.x;
}

PointRef normalize(const ChartedManifold& m, Shape shape, const PointRef& p) {
    if (shape == Shape::Periodic && p.chart != kCover) return {kCover, m.coords_in(p, kCover)};
    return m.to_safe_chart(p);
}

struct PairState {
    PointRef x, y;
    std::vector<char> merged;  // periodic coordinates
    bool coupled = false;
};

}  // namespace

std::string to_string(CouplingMethod m) {
    switch (m) {
    case CouplingMethod::Reflection: return "reflection";
    case CouplingMethod::Synchronous: return "synchronous";
    case CouplingMethod::Independent: return "independent";
    }
    return "?";
}

CouplingMethod coupling_method_from_string(const std::string& s) {
    if (s == "reflection") return CouplingMethod::Reflection;
    if (s == "synchronous") return CouplingMethod::Synchronous;
    if (s == "independent") return CouplingMethod::Independent;
    throw GeometryError(ErrorKind::InvalidArgument,
                        "unknown coupling method '" + s + "' (reflection, synchronous, independent)");
}

double default_merge_radius(int dim, double dt) { return 2.0 * std::sqrt(dim * dt); }

double coupling_distance(const ChartedManifold& m, const PointRef& a, const PointRef& b) {
    switch (shape_of(m)) {
    case Shape::Sphere: {
        const double r = sphere_radius(m);
        const double chord = (sphere_embed(m, a) - sphere_embed(m, b)).norm();
        return 2 * r * std::asin(std::min(1.0, chord / (2 * r)));
    }
    case Shape::Periodic: {
        Vec d = m.coords_in(b, kCover) - m.coords_in(a, kCover);
        for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = wrap_signed(d[i]);
        return d.norm();
    }
    case Shape::Flat: return (b.x - a.x).norm();
    }
    return 0.0;
}

std::vector<CoupledPair> couple_brownian(const ChartedManifold& m, const PointRef& x0, const PointRef& y0,
                                         double horizon, double dt, int n_pairs, CouplingMethod method,
                                         std::uint64_t seed, double merge_radius) {
    const Shape shape = shape_of(m);
    const int steps = grid_steps(horizon, dt);
    if (n_pairs <= 0) throw GeometryError(ErrorKind::InvalidArgument, "n_pairs must be positive");
    const int n = m.dim();
    const double radius = merge_radius > 0.0 ? merge_radius : default_merge_radius(n, dt);
    const double sq = std::sqrt(dt);
    const PointRef start_x = normalize(m, shape, x0);
    const PointRef start_y = normalize(m, shape, y0);

    std::vector<CoupledPair> pairs(static_cast<std::size_t>(n_pairs));
    parallel_for(pairs.size(), [&](std::size_t i) {
        NormalStream rx(stream_seed(seed, i, 0x636f75706c65ULL));
        NormalStream ry(stream_seed(seed, i, 0x636f75706c66ULL));
        NormalStream rb(stream_seed(seed, i, 0x636f75706c67ULL));
        // a reflected pair whose gap g0 -> g1 keeps its sign may still have met in between: the gap
        // diffuses with variance 4 dt, so the bridge hits zero with probability exp(-g0 g1 / 2 dt)
        auto bridge_met = [&](double g0, double g1) {
            return method == CouplingMethod::Reflection && rb.uniform() < std::exp(-std::abs(g0 * g1) / (2.0 * dt));
        };
        CoupledPair& pair = pairs[i];
        pair.method = method;
        PairState st{start_x, start_y, std::vector<char>(static_cast<std::size_t>(n), 0), false};
        Vec offset = Vec::Zero(n);

        auto merge_now = [&](double t) {
            if (shape == Shape::Periodic) {
                offset = st.y.x - st.x.x;
                for (Eigen::Index k = 0; k < n; ++k) offset[k] -= wrap_signed(offset[k]);
                st.y = {st.x.chart, st.x.x + offset};
            } else {
                st.y = st.x;
            }
            st.coupled = true;
            pair.coupling_time = t;
        };
        if (coupling_distance(m, st.x, st.y) <= radius) merge_now(0.0);

        pair.x.time.push_back(0.0);
        pair.y.time.push_back(0.0);
        pair.x.states.push_back(st.x);
        pair.y.states.push_back(st.y);
        for (int k = 1; k <= steps; ++k) {
            const double t = k * dt;
            const Vec dwx = rx.next(n) * sq;
            const Vec dwi = ry.next(n) * sq;
            const PointRef xn = brownian_step(m, st.x, dwx, dt);
            PointRef yn;
            if (st.coupled) {
                yn = {xn.chart, xn.x + offset};
            } else {
                Vec dwy = method == CouplingMethod::Independent ? dwi : dwx;
                if (method == CouplingMethod::Reflection) {
                    if (shape == Shape::Sphere) {
                        const Mat fx = sphere_embed_jacobian(m, st.x) * m.inverse_sqrt_metric(st.x);
                        const Mat fy = sphere_embed_jacobian(m, st.y) * m.inverse_sqrt_metric(st.y);
                        const Vec chord = sphere_embed(m, st.x) - sphere_embed(m, st.y);
                        const Vec u = chord.normalized();
                        const Vec xi = fx * dwx;
                        dwy = fy.transpose() * (xi - 2.0 * u.dot(xi) * u);
                    } else if (shape == Shape::Flat) {
                        const Vec u = (st.x.x - st.y.x).normalized();
                        dwy = dwx - 2.0 * u.dot(dwx) * u;
                    } else {
                        dwy = -dwx;
                    }
                }
                if (shape == Shape::Periodic)
                    for (int c = 0; c < n; ++c)
                        if (st.merged[static_cast<std::size_t>(c)]) dwy[c] = dwx[c];
                yn = brownian_step(m, st.y, dwy, dt);
            }

            const PointRef xo = st.x, yo = st.y;
            st.x = xn;
            st.y = yn;
            if (!st.coupled) {
                if (shape == Shape::Periodic) {
                    bool all = true;
                    for (int c = 0; c < n; ++c) {
                        auto& done = st.merged[static_cast<std::size_t>(c)];
                        if (!done) {
                            const double before = wrap_signed(yo.x[c] - xo.x[c]);
                            const double after = wrap_signed(st.y.x[c] - st.x.x[c]);
                            const bool crossed = method == CouplingMethod::Reflection && before * after < 0.0 &&
                                                 std::abs(before) < std::numbers::pi / 2 &&
                                                 std::abs(after) < std::numbers::pi / 2;
                            if (std::abs(after) <= radius || crossed ||
                                (std::abs(before) < std::numbers::pi / 2 && bridge_met(before, after))) {
                                st.y.x[c] -= after;
                                done = 1;
                            }
                        }
                        all = all && done;
                    }
                    if (all) merge_now(t);
                } else {
                    const bool crossed = method == CouplingMethod::Reflection &&
                                         (ambient(m, shape, st.x) - ambient(m, shape, st.y))
                                                 .dot(ambient(m, shape, xo) - ambient(m, shape, yo)) < 0.0;
                    const double gap = coupling_distance(m, st.x, st.y);
                    if (crossed || gap <= radius || bridge_met(coupling_distance(m, xo, yo), gap)) merge_now(t);
                }
            }
            pair.x.time.push_back(t);
            pair.y.time.push_back(t);
            pair.x.states.push_back(st.x);
            pair.y.states.push_back(st.y);
        }
    });
    return pairs;
}

CoalescedPath coalesce(const CoupledPair& pair) {
    CoalescedPath out{pair, pair.y};
    if (!std::isfinite(pair.coupling_time)) return out;
    std::size_t k0 = 0;
    while (k0 < pair.x.time.size() && pair.x.time[k0] < pair.coupling_time - 1e-12) ++k0;
    if (k0 == pair.x.time.size()) return out;
    const PointRef& xa = pair.x.states[k0];
    const PointRef& ya = pair.y.states[k0];
    // same point as X; a constant lattice offset keeps periodic coordinates continuous
    const Vec offset = xa.chart == ya.chart ? Vec(ya.x - xa.x) : Vec(Vec::Zero(xa.x.size()));
    for (std::size_t k = k0; k < pair.x.size(); ++k)
        out.y_bar.states[k] = {pair.x.states[k].chart, pair.x.states[k].x + offset};
    return out;
}

double coupling_probability(const std::vector<CoupledPair>& pairs, double t) {
    if (pairs.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& p : pairs) hit += p.coupling_time <= t + 1e-12 ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(pairs.size());
}

bool NonconfluenceReport::passed() const {
    return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
}

double confluent_pair_deviation(const SamplePath& x, const SamplePath& y, double tolerance) {
    if (x.size() != y.size() || x.size() == 0)
        throw GeometryError(ErrorKind::InvalidArgument, "paths on different grids");
    if ((x.states.back().x - y.states.back().x).norm() > tolerance)
        throw GeometryError(ErrorKind::InvalidArgument, "construction violates X_T = Y_T");
    double worst = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, (x.states[k].x - y.states[k].x).norm());
    return worst;
}

NonconfluenceReport nonconfluence_flat_check(int n_pairs, double horizon, double dt, std::uint64_t seed) {
    const auto plane = make_flat(2);
    const int steps = grid_steps(horizon, dt);
    NonconfluenceReport report;

    // X = Y identically
    {
        const auto ens = simulate_brownian(*plane, {0, make_vec({0.0, 0.0})}, horizon, dt, n_pairs, seed);
        NonconfluenceRow row{"identical"};
        for (const auto& p : ens.paths) row.max_deviation = std::max(row.max_deviation, confluent_pair_deviation(p, p));
        row.passed = row.max_deviation == 0.0;
        report.rows.push_back(row);
    }
    // common endpoint, X summed backwards from it, Y forwards from X_0 with the same increments
    {
        NonconfluenceRow row{"shared-increments-reversed"};
        const Vec end = make_vec({0.3, -0.2});
        for (int i = 0; i < n_pairs; ++i) {
            NormalStream rng(stream_seed(seed, static_cast<std::uint64_t>(i), 0x7265766572ULL));
            std::vector<Vec> dw;
            for (int k = 0; k < steps; ++k) dw.push_back(rng.next(2) * std::sqrt(dt));
            SamplePath x, y;
            x.time.resize(static_cast<std::size_t>(steps) + 1);
            x.states.resize(x.time.size());
            x.states.back() = {0, end};
            for (int k = steps - 1; k >= 0; --k)
                x.states[static_cast<std::size_t>(k)] = {0, x.states[static_cast<std::size_t>(k) + 1].x - dw[static_cast<std::size_t>(k)]};
            y.time = x.time;
            y.states.push_back(x.states.front());
            for (int k = 0; k < steps; ++k) y.states.push_back({0, y.states.back().x + dw[static_cast<std::size_t>(k)]});
            // rounding of the two summation orders only; snap the endpoint that defines the pair
            if ((y.states.back().x - end).norm() < 1e-9) y.states.back().x = end;
            row.max_deviation = std::max(row.max_deviation, confluent_pair_deviation(x, y));
        }
        row.passed = row.max_deviation <= 1e-9;
        report.rows.push_back(row);
    }
    // distinct starts: |X - Y| is a submartingale, so X_T = Y_T cannot be forced
    {
        NonconfluenceRow row{"distinct-start"};
        row.terminal_equal = false;
        const auto xs = simulate_brownian(*plane, {0, make_vec({0.0, 0.0})}, horizon, dt, n_pairs, seed, {StepScheme::Euler, {}, 11});
        const auto ys = simulate_brownian(*plane, {0, make_vec({1.0, 0.0})}, horizon, dt, n_pairs, seed, {StepScheme::Euler, {}, 12});
        std::vector<double> mean(static_cast<std::size_t>(steps) + 1, 0.0);
        std::vector<double> terminal;
        bool met = false;
        for (int i = 0; i < n_pairs; ++i) {
            const auto& x = xs.paths[static_cast<std::size_t>(i)];
            const auto& y = ys.paths[static_cast<std::size_t>(i)];
            for (std::size_t k = 0; k < x.size(); ++k) mean[k] += (x.states[k].x - y.states[k].x).norm() / n_pairs;
            terminal.push_back((x.states.back().x - y.states.back().x).norm());
            met = met || terminal.back() < 1e-12;
        }
        const SampleStats s = sample_stats(terminal);
        row.bound_excess = *std::max_element(mean.begin(), mean.end()) - s.mean;
        row.max_deviation = s.mean;
        row.passed = !met && row.bound_excess <= 3 * s.standard_error;
        report.rows.push_back(row);
    }
    return report;
}

std::vector<std::string> LiouvilleReport::harmonic_consistent() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
        if (r.decision == Decision::MartingaleConsistent) out.push_back(r.label);
    return out;
}

LiouvilleReport liouville_experiment(const AssociatedPtr& bundle, const std::vector<FamilyMember>& family,
                                     const LiouvilleOptions& options) {
    LiouvilleReport report;
    report.bundle = bundle->name();
    const ChartedManifold& base = bundle->base();
    const PathEnsemble ens = simulate_brownian(base, options.x0, options.horizon, options.dt, options.n_paths, options.seed);
    const auto frames = sample_frames(bundle->principal(), 100, options.seed);

    for (const auto& member : family) {
        LiouvilleRow row;
        row.label = member.label;
        row.parameter = member.parameter;
        row.verdicts = vertical_martingale_test(member.section, ens, options.resolution);
        row.decision = combine(row.verdicts);
        if (options.predict_drift) row.predicted_drift = predicted_vertical_drift(member.section, ens, 5, options.fd_step);
        std::vector<Vec> values;
        Vec mean = Vec::Zero(bundle->fiber_dim());
        for (const auto& p : frames) {
            values.push_back(equivariant_lift(member.section, p));
            mean += values.back() / static_cast<double>(frames.size());
        }
        double ss = 0.0;
        for (const auto& v : values) ss += (v - mean).squaredNorm();
        row.lift_dispersion = std::sqrt(ss / static_cast<double>(values.size()));
        report.rows.push_back(row);
    }

    if (options.diagnostic_pairs > 0) {
        std::optional<PointRef> y0;
        const std::string& name = base.name();
        if (name.rfind("sphere", 0) == 0) {
            y0 = sphere_point(base, -sphere_embed(base, options.x0));
        } else if (name.rfind("torus", 0) == 0) {
            y0 = PointRef{kCover, Vec(base.coords_in(options.x0, kCover).array() + std::numbers::pi)};
        }
        if (y0) {
            const PrincipalBundle& p = bundle->principal();
            const auto pairs = couple_brownian(base, options.x0, *y0, options.horizon, options.dt, options.diagnostic_pairs,
                                               CouplingMethod::Reflection, splitmix64(options.seed));
            std::vector<SamplePath> lx, ly;
            for (const auto& pair : pairs) {
                lx.push_back(p.horizontal_lift_path(pair.x, 0.0));
                ly.push_back(p.horizontal_lift_path(coalesce(pair).y_bar, 0.0));
            }
            const std::size_t last = pairs.front().x.size() - 1;
            for (int q = 1; q <= 4; ++q) {
                const std::size_t k = last * static_cast<std::size_t>(q) / 4;
                FiberGapSample s;
                s.time = pairs.front().x.time[k];
                double gap = 0.0;
                int coupled = 0;
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    if (pairs[i].coupling_time > s.time + 1e-12) continue;
                    ++coupled;
                    gap += std::sqrt(p.fiber_metric()) *
                           std::abs(wrap_signed(p.angle(lx[i].states[k]) - p.angle(ly[i].states[k])));
                }
                s.coupled_fraction = static_cast<double>(coupled) / static_cast<double>(pairs.size());
                s.mean_fiber_gap = coupled ? gap / coupled : std::numeric_limits<double>::quiet_NaN();
                report.coupling_diagnostic.push_back(s);
            }
        }
    }
    return report;
}

}  // namespace bundlemart
