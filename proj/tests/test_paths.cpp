#include "bundlemart/models.hpp"
#include "bundlemart/paths.hpp"
#include "bundlemart/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace bundlemart;

namespace {

RealPath constant_path(double terminal, double horizon = 1.0) {
    return {{0.0, horizon}, {0.0, terminal}};
}

double height(const ChartedManifold& s2, const PointRef& p) { return sphere_embed(s2, p)[2]; }

}  // namespace

TEST_CASE("flat Brownian motion has unit variance per coordinate") {
    const auto m = make_flat(2);
    const auto ens = simulate_brownian(*m, {0, make_vec({0.0, 0.0})}, 1.0, 1e-2, 4000, 42);
    std::vector<double> x1, x2;
    for (const auto& p : ens.paths) {
        CHECK(p.size() == 101);
        x1.push_back(p.states.back().x[0]);
        x2.push_back(p.states.back().x[1]);
    }
    const SampleStats s1 = sample_stats(x1);
    // standard error of the sample variance of a Gaussian: sqrt(2/(n-1))
    CHECK(std::abs(s1.variance - 1.0) < 3 * std::sqrt(2.0 / 3999));
    CHECK(std::abs(s1.mean) < 3 * s1.standard_error);
    CHECK(std::abs(sample_stats(x2).variance - 1.0) < 3 * std::sqrt(2.0 / 3999));
}

TEST_CASE("ensembles are reproducible and independent of the worker count") {
    const auto s2 = make_sphere(2);
    const PointRef x0{kNorth, make_vec({0.5, 0.0})};
    setenv("BUNDLEMART_THREADS", "1", 1);
    const auto a = simulate_brownian(*s2, x0, 0.5, 1e-2, 16, 7);
    setenv("BUNDLEMART_THREADS", "4", 1);
    const auto b = simulate_brownian(*s2, x0, 0.5, 1e-2, 16, 7);
    unsetenv("BUNDLEMART_THREADS");
    const auto c = simulate_brownian(*s2, x0, 0.5, 1e-2, 16, 8);
    bool differs = false;
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        for (std::size_t k = 0; k < a.paths[i].size(); ++k) {
            CHECK(a.paths[i].states[k].chart == b.paths[i].states[k].chart);
            CHECK(a.paths[i].states[k].x == b.paths[i].states[k].x);
        }
        differs = differs || a.paths[i].states.back().x != c.paths[i].states.back().x;
    }
    CHECK(differs);
    CHECK(stream_seed(1, 2, 0) != stream_seed(1, 2, 1));
}

TEST_CASE("integrals on flat space") {
    const auto m = make_flat(1);
    const auto ens = simulate_brownian(*m, {0, make_vec({0.0})}, 1.0, 1e-3, 1, 3);
    const SamplePath& path = ens.paths[0];
    const double x = path.states.back().x[0];
    const OneFormField dx = [](const PointRef&) { return make_vec({1.0}); };
    const OneFormField xdx = [](const PointRef& p) { return make_vec({p.x[0]}); };

    CHECK(ito_integral(*m, dx, path, flat_connection(1)).terminal() == doctest::Approx(x).epsilon(1e-12));
    // midpoint rule reproduces the chain rule exactly
    CHECK(stratonovich_integral(*m, xdx, path).terminal() == doctest::Approx(0.5 * x * x).epsilon(1e-12));
    CHECK(trapezoid_integral(*m, xdx, path).terminal() == doctest::Approx(0.5 * x * x).epsilon(1e-12));
    const RealPath qv = quadratic_integral(*m, [](const PointRef&) { return Mat(Mat::Identity(1, 1)); }, path);
    CHECK(ito_integral(*m, xdx, path, flat_connection(1)).terminal() ==
          doctest::Approx(0.5 * x * x - 0.5 * qv.terminal()).epsilon(1e-12));
    CHECK(qv.terminal() == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("Brownian trace identity on the sphere") {
    const auto s2 = make_sphere(2);
    const auto ens = simulate_brownian(*s2, {kNorth, make_vec({0.5, 0.0})}, 1.0, 1e-2, 300, 11);
    const BilinearField g = [&](const PointRef& p) { return s2->metric(p); };
    std::vector<RealPath> q;
    for (const auto& p : ens.paths) q.push_back(quadratic_integral(*s2, g, p));
    CHECK(sample_stats(terminal_values(q)).mean == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("heat-kernel decay of the height function on the sphere") {
    const auto s2 = make_sphere(2);
    const PointRef x0{kNorth, make_vec({0.5, 0.0})};
    const auto ens = simulate_brownian(*s2, x0, 1.0, 1e-2, 3000, 21);
    std::vector<double> h;
    for (const auto& p : ens.paths) h.push_back(height(*s2, p.states.back()));
    const SampleStats s = sample_stats(h);
    CHECK(std::abs(s.mean - std::exp(-1.0) * height(*s2, x0)) < 3 * s.standard_error + 0.01);
}

TEST_CASE("Brownian paths change charts and stay in safe regions") {
    const auto s2 = make_sphere(2);
    const auto ens = simulate_brownian(*s2, {kNorth, make_vec({0.5, 0.0})}, 2.0, 1e-2, 20, 5);
    bool switched = false;
    for (const auto& p : ens.paths) {
        p.validate();
        for (std::size_t k = 0; k < p.size(); ++k) {
            CHECK(s2->in_safe(p.states[k]));
            if (k) switched = switched || p.states[k].chart != p.states[k - 1].chart;
        }
    }
    CHECK(switched);
    const auto ret = simulate_brownian(*s2, {kNorth, make_vec({0.5, 0.0})}, 1.0, 1e-2, 5, 5,
                                       {StepScheme::GeodesicRetraction, {}, 0});
    for (const auto& p : ret.paths) CHECK(std::isfinite(p.states.back().x.norm()));
}

TEST_CASE("geometric Ito formula residual shrinks with the step") {
    const auto s2 = make_sphere(2);
    const auto r3 = make_flat(3);
    const ManifoldMap inclusion{s2.get(), r3.get(), [&](const PointRef& p) { return PointRef{0, sphere_embed(*s2, p)}; }};
    const OneFormField theta = [](const PointRef&) { return make_vec({1.0, -0.5, 2.0}); };
    auto mean_abs_residual = [&](double dt) {
        const auto ens = simulate_brownian(*s2, {kNorth, make_vec({0.5, 0.0})}, 1.0, dt, 20, 77);
        double acc = 0.0;
        for (const auto& p : ens.paths)
            acc += std::abs(geometric_ito_residual(inclusion, theta, p, levi_civita(*s2), flat_connection(3)).terminal());
        return acc / static_cast<double>(ens.paths.size());
    };
    const double coarse = mean_abs_residual(1e-2);
    const double fine = mean_abs_residual(1e-3);
    CHECK(coarse / fine >= 1.5);

    // second fundamental form of the unit sphere is -g times the normal
    const PointRef p{kNorth, make_vec({0.2, 0.1})};
    const auto beta = second_fundamental_form(inclusion, p, levi_civita(*s2), flat_connection(3));
    const Vec normal = sphere_embed(*s2, p);
    const Mat g = s2->metric(p);
    for (int a = 0; a < 3; ++a) CHECK((beta[static_cast<std::size_t>(a)] + normal[a] * g).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("drift test decisions") {
    std::vector<RealPath> zero(40, constant_path(0.0));
    CHECK(drift_test(zero).decision == Decision::MartingaleConsistent);

    std::vector<RealPath> shifted;
    for (int i = 0; i < 40; ++i) shifted.push_back(constant_path(0.5 + 0.01 * (i % 3 - 1), 2.0));
    const DriftVerdict d = drift_test(shifted);
    CHECK(d.decision == Decision::DriftDetected);
    CHECK(d.drift_estimate == doctest::Approx(0.25).epsilon(1e-3));

    std::vector<RealPath> few(10, constant_path(1.0));
    CHECK(drift_test(few).decision == Decision::Inconclusive);

    std::vector<RealPath> noisy;
    for (int i = 0; i < 40; ++i) noisy.push_back(constant_path(i % 2 ? 1.0 : -1.0));
    CHECK(drift_test(noisy).decision == Decision::Inconclusive);

    CHECK(combine({drift_test(zero), drift_test(noisy)}) == Decision::Inconclusive);
    CHECK(combine({drift_test(zero), drift_test(noisy), d}) == Decision::DriftDetected);
    CHECK(combine({drift_test(zero)}) == Decision::MartingaleConsistent);
    CHECK(to_string(Decision::DriftDetected) == "drift-detected");

    std::vector<RealPath> ragged{constant_path(0.0, 1.0), constant_path(0.0, 2.0)};
    CHECK_THROWS_AS(drift_test(ragged), GeometryError);
}

TEST_CASE("CSV output") {
    const auto m = make_flat(2);
    const auto ens = simulate_brownian(*m, {0, make_vec({0.0, 0.0})}, 0.02, 1e-2, 2, 1);
    std::ostringstream os;
    write_ensemble_csv(os, ens);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "path_id,t,chart,x0,x1");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 6);

    std::ostringstream rs;
    write_realpaths_csv(rs, {constant_path(1.0)});
    CHECK(rs.str().rfind("path_id,t,value\n", 0) == 0);
}

TEST_CASE("argument validation") {
    const auto m = make_flat(2);
    CHECK_THROWS_AS(simulate_brownian(*m, {0, make_vec({0.0, 0.0})}, 1.0, 0.0, 2, 1), GeometryError);
    CHECK_THROWS_AS(simulate_brownian(*m, {0, make_vec({0.0, 0.0})}, 1.0, -1e-3, 2, 1), GeometryError);
    SamplePath bad;
    bad.time = {0.0, 0.0};
    bad.states = {{0, make_vec({0.0, 0.0})}, {0, make_vec({0.0, 0.0})}};
    CHECK_THROWS_AS(bad.validate(), GeometryError);
    CHECK(step_scheme_from_string("geodesic_retraction") == StepScheme::GeodesicRetraction);
}
