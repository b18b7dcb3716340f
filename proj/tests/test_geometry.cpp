#include "bundlemart/geodesic.hpp"
#include "bundlemart/groups.hpp"
#include "bundlemart/models.hpp"
#include "bundlemart/spaces.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bundlemart;
using testing_support::random_in_ball;
using testing_support::random_vec;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("flat space has vanishing connection") {
    const auto m = make_flat(3);
    const PointRef p{0, make_vec({0.3, -1.0, 2.0})};
    CHECK(m->christoffel(p).max_abs_difference(Christoffel(3)) == 0.0);
    CHECK(m->brownian_drift(p).norm() == 0.0);
}

TEST_CASE("sphere metric and closed-form connection") {
    const auto s2 = make_sphere(2);
    const PointRef origin{kNorth, make_vec({0.0, 0.0})};
    CHECK(s2->metric(origin).isApprox(Mat(4.0 * Mat::Identity(2, 2))));
    CHECK(s2->christoffel(origin).max_abs_difference(Christoffel(2)) < 1e-14);

    std::mt19937_64 rng(7);
    for (int n : {2, 3}) {
        const auto s = make_sphere(n);
        for (int k = 0; k < 50; ++k) {
            const PointRef p{k % 2, random_in_ball(rng, n, 1.4)};
            const double r2 = p.x.squaredNorm();
            CHECK(s->metric(p).isApprox(Mat(4.0 / ((1 + r2) * (1 + r2)) * Mat::Identity(n, n)), 1e-12));
            CHECK(s->christoffel(p).max_abs_difference(christoffel_from_metric(*s, p)) < 1e-7);
        }
    }
}

TEST_CASE("chart transitions") {
    const auto s2 = make_sphere(2);
    const PointRef eq{kNorth, make_vec({1.0, 0.0})};
    CHECK((s2->transition(eq, kSouth).x - make_vec({1.0, 0.0})).norm() < 1e-15);
    CHECK(s2->transition(eq, kNorth).x == eq.x);

    const auto torus = make_torus();
    const PointRef p{kCover, make_vec({0.2, 2 * pi + 0.3})};
    CHECK((torus->transition(p, kFundamental).x - make_vec({0.2, 0.3})).norm() < 1e-12);

    SUBCASE("round trips and embedding agreement") {
        std::mt19937_64 rng(11);
        for (const auto& m : {make_sphere(2), make_sphere(3), make_sphere(2, 0.5)}) {
            for (int k = 0; k < 100; ++k) {
                const PointRef a{kNorth, random_in_ball(rng, m->dim(), 3.0)};
                if (a.x.norm() < 0.2) continue;
                const PointRef b = m->transition(a, kSouth);
                CHECK((m->transition(b, kNorth).x - a.x).norm() < 1e-10);
                CHECK((sphere_embed(*m, a) - sphere_embed(*m, b)).norm() < 1e-12);
            }
        }
    }
    SUBCASE("orientation preserving") {
        const PointRef a{kNorth, make_vec({0.4, 0.7})};
        CHECK(s2->transition_jacobian(a, kSouth).determinant() > 0.0);
    }
}

TEST_CASE("one-form components transform covariantly") {
    // d(height) in both charts
    const auto s2 = make_sphere(2);
    auto height_grad = [&](ChartId c, const Vec& x) {
        return fd_jacobian([&](const Vec& y) { return Vec(sphere_embed(*s2, {c, y}).tail(1)); }, x, 1e-4);
    };
    std::mt19937_64 rng(3);
    for (int k = 0; k < 100; ++k) {
        const PointRef a{kNorth, random_in_ball(rng, 2, 1.4)};
        if (a.x.norm() < 0.3) continue;
        const PointRef b = s2->transition(a, kSouth);
        const Mat j = s2->transition_jacobian(a, kSouth);
        const Vec theta_a = height_grad(kNorth, a.x).transpose();
        const Vec theta_b = height_grad(kSouth, b.x).transpose();
        CHECK((j.transpose() * theta_b - theta_a).norm() < 1e-8);
    }
}

TEST_CASE("metric compatibility of the supplied connections") {
    std::mt19937_64 rng(5);
    for (const auto& m : {make_sphere(2), make_sphere(3), make_torus()}) {
        for (int k = 0; k < 100; ++k) {
            const PointRef p{0, random_in_ball(rng, m->dim(), 1.4)};
            CHECK(metric_compatibility_defect(*m, p) < 1e-6);
        }
    }
}

TEST_CASE("geodesics") {
    SUBCASE("flat straight line") {
        const auto m = make_flat(2);
        const auto end = integrate_geodesic(*m, {0, make_vec({0.0, 0.0})}, make_vec({1.0, 0.0}), 1.0, 10);
        CHECK((end.point.x - make_vec({1.0, 0.0})).norm() < 1e-14);
    }
    SUBCASE("great circle of length pi reaches the antipode") {
        const auto s2 = make_sphere(2);
        const PointRef start{kNorth, make_vec({1.0, 0.0})};
        const Vec x0 = sphere_embed(*s2, start);
        const Vec v = make_vec({0.0, 1.0});  // unit speed on the equator
        const auto end = integrate_geodesic(*s2, start, v, pi, 4000);
        CHECK((sphere_embed(*s2, end.point) + x0).norm() < 1e-8);
        CHECK(s2->norm(end.point, end.velocity) == doctest::Approx(1.0).epsilon(1e-5));
    }
    SUBCASE("circle geodesic wraps") {
        const auto c = make_circle();
        const auto end = integrate_geodesic(*c, {kCover, make_vec({0.5})}, make_vec({1.0}), 7.0, 100);
        CHECK(wrap_angle(end.point.x[0]) == doctest::Approx(wrap_angle(7.5)).epsilon(1e-12));
    }
    SUBCASE("energy conservation") {
        const auto s2 = make_sphere(2);
        const PointRef p{kNorth, make_vec({0.3, -0.2})};
        const Vec v = make_vec({0.2, 0.25});
        const double e0 = s2->norm(p, v);
        const auto end = integrate_geodesic(*s2, p, v, 1.0, 10000);
        CHECK(std::abs(s2->norm(end.point, end.velocity) - e0) < 1e-5);
    }
}

TEST_CASE("distance estimates") {
    const auto flat = make_flat(2);
    auto d = distance_estimate(*flat, {0, make_vec({0.0, 0.0})}, {0, make_vec({3.0, 4.0})});
    CHECK(d.converged);
    CHECK(d.distance == doctest::Approx(5.0).epsilon(1e-9));

    const auto s2 = make_sphere(2);
    d = distance_estimate(*s2, {kNorth, make_vec({0.0, 0.0})}, {kNorth, make_vec({1.0, 0.0})});
    CHECK(std::abs(d.distance - pi / 2) < 1e-3);

    const auto s3 = make_sphere(3);
    const Vec u = make_vec({0.6, 0.0, 0.8, 0.0});
    for (double theta : {0.1, 0.5, 1.0, 3.0}) {
        // u e^{i theta} in C^2
        const double c = std::cos(theta), s = std::sin(theta);
        const Vec w = make_vec({0.6 * c, 0.6 * s, 0.8 * c, 0.8 * s});
        const auto r = distance_estimate(*s3, sphere_point(*s3, u), sphere_point(*s3, w));
        CHECK(r.converged);
        CHECK(std::abs(r.distance - theta) < 1e-3);
    }
}

TEST_CASE("curve length of the equator") {
    const auto s2 = make_sphere(2);
    const double len = curve_length(
        *s2, kNorth, [](double t) { return make_vec({std::cos(t), std::sin(t)}); }, 0.0, 2 * pi);
    CHECK(len == doctest::Approx(2 * pi).epsilon(1e-8));
}

TEST_CASE("safe chart selection") {
    const auto s2 = make_sphere(2);
    const PointRef far{kNorth, make_vec({3.0, 0.0})};
    const PointRef safe = s2->to_safe_chart(far);
    CHECK(safe.chart == kSouth);
    CHECK(s2->in_safe(safe));
    CHECK_THROWS_AS(s2->transition({kNorth, make_vec({0.0, 0.0})}, kSouth), GeometryError);
}

TEST_CASE("matrix groups") {
    const MatrixGroup so3(GroupKind::SO3);
    std::mt19937_64 rng(9);
    for (int k = 0; k < 50; ++k) {
        const Vec xi = random_in_ball(rng, 3, 3.0);
        const Mat g = so3.exp(xi);
        CHECK((g * g.transpose() - Mat::Identity(3, 3)).norm() < 1e-12);
        CHECK((so3.exp(so3.log(g)) - g).norm() < 1e-9);
    }
    const MatrixGroup o2(GroupKind::O2);
    CHECK_THROWS_AS(o2.log(o2.reflection()), GeometryError);
    CHECK(std::isinf(o2.distance(o2.identity(), o2.reflection())));
    const MatrixGroup u1(GroupKind::U1);
    CHECK(u1.distance(u1.exp(make_vec({0.1})), u1.exp(make_vec({3.0}))) == doctest::Approx(2.9));
    CHECK(u1.distance(u1.exp(make_vec({0.0})), u1.exp(make_vec({4.0}))) == doctest::Approx(2 * pi - 4.0));
    CHECK(group_kind_from_string("SO3") == GroupKind::SO3);
    CHECK_THROWS(group_kind_from_string("SU2"));
    (void)random_vec;
}
